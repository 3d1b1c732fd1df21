#include "bnptrial/truth.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bnptrial {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate_component(const Component& c) {
    std::visit(overloaded{
                   [](const PointMassZero&) {},
                   [](const NormalY& n) {
                       if (!(n.sd > 0.0) || !std::isfinite(n.mean))
                           throw std::invalid_argument("normal component needs finite mean and sd > 0");
                   },
                   [](const ExponentialY& e) {
                       if (!(e.rate > 0.0)) throw std::invalid_argument("exponential component needs rate > 0");
                   },
                   [](const WeibullY& w) {
                       if (!(w.shape > 0.0) || !(w.scale > 0.0))
                           throw std::invalid_argument("weibull component needs shape > 0 and scale > 0");
                   },
                   [](const EmpiricalDays& e) {
                       if (!e.days || e.days->empty())
                           throw std::invalid_argument("empirical component '" + e.source + "' has no data");
                       for (double d : *e.days) {
                           if (!(d >= 0.0)) throw std::invalid_argument("empirical component has negative days");
                       }
                   },
               },
               c);
}

}  // namespace

void validate_simplex(const std::vector<double>& weights, double tol) {
    if (weights.empty()) throw std::invalid_argument("empty weight vector");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("negative mixture weight");
        total += w;
    }
    if (std::abs(total - 1.0) > tol) {
        std::ostringstream os;
        os << "mixture weights sum to " << total << ", expected 1";
        throw std::invalid_argument(os.str());
    }
}

std::string describe(const Component& c) {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const PointMassZero&) { os << "zero"; },
                   [&](const NormalY& n) { os << "normal(" << n.mean << "," << n.sd << ")"; },
                   [&](const ExponentialY& e) { os << "exp(" << e.rate << ")"; },
                   [&](const WeibullY& w) { os << "weibull(" << w.shape << "," << w.scale << ")"; },
                   [&](const EmpiricalDays& e) { os << "empirical(" << e.source << ")"; },
               },
               c);
    return os.str();
}

TruthSpec::TruthSpec(std::vector<double> weights, std::vector<Component> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
    if (weights_.size() != components_.size())
        throw std::invalid_argument("weights and components differ in length");
    validate_simplex(weights_);
    for (const auto& c : components_) validate_component(c);
}

TruthSpec TruthSpec::point_mass() { return TruthSpec({1.0}, {PointMassZero{}}); }

double TruthSpec::sample(Rng& rng) const {
    if (components_.empty()) throw std::logic_error("sampling from an empty TruthSpec");
    std::size_t k = 0;
    if (components_.size() > 1) {
        double u = rng.uniform();
        for (k = 0; k + 1 < weights_.size(); ++k) {
            u -= weights_[k];
            if (u <= 0.0) break;
        }
    }
    return std::visit(overloaded{
                          [](const PointMassZero&) { return 0.0; },
                          [&](const NormalY& n) { return rng.normal(n.mean, n.sd); },
                          [&](const ExponentialY& e) { return rng.exponential(e.rate); },
                          [&](const WeibullY& w) {
                              return w.scale * std::pow(-std::log(rng.uniform()), 1.0 / w.shape);
                          },
                          [&](const EmpiricalDays& e) {
                              return std::log1p((*e.days)[rng.uniform_index(e.days->size())]);
                          },
                      },
                      components_[k]);
}

std::string TruthSpec::describe() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        if (k) os << " + ";
        os << weights_[k] << "*" << bnptrial::describe(components_[k]);
    }
    return os.str();
}

}  // namespace bnptrial
