#pragma once

#include "reprog/config.hpp"
#include "reprog/pipeline.hpp"

namespace testing_support {

// A reduced version of the default experiment that trains in a few seconds.
inline reprog::ExperimentConfig small_config() {
    auto cfg = reprog::ExperimentConfig::defaults();
    cfg.synth.able_subjects.resize(4);
    cfg.synth.able_cycles = 16;
    cfg.synth.amputee_cycles = 12;
    cfg.foundation.layers = {{8, 3, 1}, {8, 3, 2}};
    cfg.foundation.head_hidden = 16;
    cfg.foundation_train.epochs = 6;
    cfg.direct_train.epochs = 10;
    cfg.direct_train.batch_size = 8;
    cfg.refurbish_train.epochs = 10;
    cfg.refurbish_train.batch_size = 8;
    return cfg;
}

struct SmallSuite {
    reprog::ExperimentConfig cfg;
    reprog::Dataset data;
    reprog::FoundationFit fit;
    std::vector<reprog::AmputeeCase> cases;
};

inline const SmallSuite& small_suite() {
    static const SmallSuite suite = [] {
        SmallSuite s;
        s.cfg = small_config();
        s.data = reprog::synthesize(s.cfg);
        s.fit = reprog::fit_foundation(s.data, s.cfg);
        s.cases = reprog::prepare_cases(s.fit.model, s.fit.norm, s.data, s.cfg);
        return s;
    }();
    return suite;
}

}  // namespace testing_support
