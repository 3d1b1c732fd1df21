#include "bnptrial/posterior.hpp"

#include "bnptrial/stats.hpp"

namespace bnptrial {

void TrialData::append(const TrialData& more) {
    for (int j = 0; j < 2; ++j) y[j].insert(y[j].end(), more.y[j].begin(), more.y[j].end());
}

double PosteriorDraws::mean_u0() const { return sample_mean(u_bar0); }
double PosteriorDraws::mean_u1() const { return sample_mean(u_bar1); }

}  // namespace bnptrial
