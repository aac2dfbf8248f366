#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wattrank/store.hpp"

#ifndef WATTRANK_FIXTURE_DIR
#error "WATTRANK_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace wattrank::testing {

inline std::vector<store::RunRecord> load_fixture(const std::string& name) {
    std::ifstream in(std::string(WATTRANK_FIXTURE_DIR) + "/" + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return store::import_csv(ss.str());
}

inline std::vector<store::RunRecord> segmentation_runs() { return load_fixture("segmentation_runs.csv"); }
inline std::vector<store::RunRecord> action_recognition_runs() { return load_fixture("action_recognition_runs.csv"); }

inline std::vector<store::RunRecord> only_dataset(const std::vector<store::RunRecord>& runs, const std::string& dataset) {
    std::vector<store::RunRecord> out;
    for (const auto& r : runs) {
        if (r.dataset == dataset) out.push_back(r);
    }
    return out;
}

/// Published score for each fixture row.
struct Published {
    const char* run_id;
    double sam;
};

inline const std::vector<Published>& published_segmentation() {
    static const std::vector<Published> rows = {
        {"seg-cityscapes-pspnet", 0.906},    {"seg-cityscapes-deeplabv3", 0.935}, {"seg-cityscapes-bisenet", 0.989},
        {"seg-cityscapes-segmenter", 0.574}, {"seg-cityscapes-setr", 0.585},      {"seg-cityscapes-mask2former", 1.113},
        {"seg-ade20k-beit", 0.031},          {"seg-ade20k-mae", 0.039},
    };
    return rows;
}

inline const std::vector<Published>& published_action_recognition() {
    static const std::vector<Published> rows = {
        {"ar-ssv2-timesformer", 0.119},       {"ar-ssv2-uniformerv2-in21k", 0.222}, {"ar-ssv2-uniformerv2-clip", 0.209},
        {"ar-ssv2-movinet", 0.174},           {"ar-ssv2-i3d", 0.072},               {"ar-ssv2-tsm", 0.252},
        {"ar-ssv2-trn", 0.061},               {"ar-k400-timesformer", 0.462},       {"ar-k400-uniformerv2-in21k", 0.637},
        {"ar-k400-uniformerv2-clip", 0.552},  {"ar-k400-movinet", 0.235},           {"ar-k400-i3d", 0.513},
        {"ar-k400-tsm", 0.533},
    };
    return rows;
}

}  // namespace wattrank::testing
