#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "bnptrial/truth.hpp"

namespace bnptrial {

class MixtureParseError : public std::invalid_argument {
   public:
    MixtureParseError(const std::string& msg, std::size_t position)
        : std::invalid_argument(msg + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

   private:
    std::size_t position_;
};

// Parses "0.2*zero + 0.8*normal(1.5,0.3)". Terms: zero, normal(mean,sd),
// exp(rate), weibull(shape,scale), all on the Y scale. A term without a
// weight gets weight 1.
TruthSpec parse_mixture(const std::string& text);

}  // namespace bnptrial
