#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "bnptrial/rng.hpp"

namespace bnptrial {

// Outcome distributions are expressed on Y = log(T + 1).

struct PointMassZero {};

struct NormalY {
    double mean = 0.0;
    double sd = 1.0;
};

struct ExponentialY {
    double rate = 1.0;
};

// Survival exp(-(y / scale)^shape).
struct WeibullY {
    double shape = 1.0;
    double scale = 1.0;
};

// Resampling of recorded resolution times (days, 0 = no leak).
struct EmpiricalDays {
    std::shared_ptr<const std::vector<double>> days;
    std::string source;
};

using Component = std::variant<PointMassZero, NormalY, ExponentialY, WeibullY, EmpiricalDays>;

std::string describe(const Component& c);

class TruthSpec {
   public:
    TruthSpec() = default;
    // Throws std::invalid_argument if the weights are not a simplex or a
    // component has invalid parameters.
    TruthSpec(std::vector<double> weights, std::vector<Component> components);

    static TruthSpec point_mass();

    const std::vector<double>& weights() const { return weights_; }
    const std::vector<Component>& components() const { return components_; }

    // One outcome on the Y scale. Point-mass draws return exactly 0.
    double sample(Rng& rng) const;

    std::string describe() const;

   private:
    std::vector<double> weights_;
    std::vector<Component> components_;
};

void validate_simplex(const std::vector<double>& weights, double tol = 1e-10);

}  // namespace bnptrial
