#include <hdvar/lasso.hpp>

#include <cmath>
#include <sstream>

namespace hdvar {

double theoretical_lambda(int T_eff, int n, int p, double epsilon, double tau_star, double alpha) {
  require(T_eff >= 1 && n >= 1 && p >= 1, "theoretical_lambda: T, n and p must be positive");
  require(epsilon > 0.0 && tau_star > 0.0 && alpha > 0.0,
          "theoretical_lambda: epsilon, tau_star and alpha must be positive");
  const double nn = static_cast<double>(n);
  const double log_n2p = std::log(nn * nn * p);
  const double side = epsilon + log_n2p;
  if (!(T_eff > side)) {
    std::ostringstream msg;
    msg << "theoretical_lambda: side condition T > eps + log(n^2 p) violated: T = " << T_eff
        << ", eps + log(n^2 p) = " << side;
    throw ValidationError(msg.str());
  }
  const double log_tn2p = std::log(static_cast<double>(T_eff)) + log_n2p;
  return tau_star * std::pow(epsilon + log_tn2p, 2.0 / alpha) * std::sqrt(side / T_eff);
}

std::string PenaltyStrategy::name() const {
  switch (kind) {
    case Kind::kBic:
      return "bic";
    case Kind::kFixed:
      return "fixed";
    case Kind::kTheoretical:
      return "theoretical";
  }
  return "unknown";
}

}  // namespace hdvar
