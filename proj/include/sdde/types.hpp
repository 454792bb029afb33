#pragma once

#include <Eigen/Core>

namespace sdde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Which one-sided limit to take at a breakpoint.
enum class Side { Left, Right };

[[nodiscard]] constexpr Side opposite(Side s) noexcept { return s == Side::Left ? Side::Right : Side::Left; }

}  // namespace sdde
