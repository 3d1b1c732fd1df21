#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bnptrial {

// Outcomes on the Y = log(T + 1) scale per arm; index 0 = control,
// 1 = treatment. Exactly 0 marks a patient with no air leak.
struct TrialData {
    std::array<std::vector<double>, 2> y;

    std::size_t size() const { return y[0].size() + y[1].size(); }
    void append(const TrialData& more);
};

// One row of the optional chain dump, original (unstandardized) scale.
struct ChainRow {
    double u_bar0;
    double u_bar1;
    double sigma2;
    double kappa;
    double alpha;
    double nu00;
    double nu10;
};

struct DdpState;
struct StandardizationTransform;

// Per-draw expected utilities shared by all models, so the trial engine is
// model agnostic.
struct PosteriorDraws {
    std::vector<double> u_bar0;
    std::vector<double> u_bar1;
    std::vector<ChainRow> trace;
    std::vector<std::string> warnings;
    std::map<std::string, double> diagnostics;

    std::size_t size() const { return u_bar0.size(); }
    double mean_u0() const;
    double mean_u1() const;
    double mean_delta() const { return mean_u1() - mean_u0(); }
};

}  // namespace bnptrial
