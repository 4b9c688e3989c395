#ifndef LIPDP_ACCOUNTANT_HPP
#define LIPDP_ACCOUNTANT_HPP

#include <string>
#include <vector>

namespace lipdp {

/// Renyi orders the ledger tracks: integers 2..64, which admit a closed
/// binomial sum, plus the fractional low orders 1.25 and 1.5 for
/// high-noise regimes.
std::vector<double> default_rdp_orders();

/// Gaussian-mechanism calibration sigma = sensitivity *
/// sqrt(2 ln(1.25/delta)) / epsilon. Requires epsilon > 0, delta in
/// (0,1), sensitivity >= 0.
double gaussian_sigma_for(double epsilon, double delta, double sensitivity);

/// Renyi divergence bound of one Poisson-subsampled Gaussian release at
/// order alpha: sampling rate q in (0,1], noise multiplier sigma.
/// q = 1 returns alpha/(2 sigma^2) exactly; integer alpha uses the
/// binomial sum over log-sum-exp; fractional alpha integrates the
/// defining expectation by adaptive quadrature. sigma = 0 with q > 0
/// returns +infinity (non-private).
double rdp_step(double q, double sigma, double alpha);

struct PrivacySpend {
  double epsilon = 0.0;
  double delta = 0.0;
  /// Order attaining the minimum in the RDP-to-DP conversion.
  double argmin_order = 0.0;
};

/// Accumulates identical subsampled-Gaussian steps. Composition over T
/// steps multiplies the per-step bound, so the per-order totals are
/// T * rdp_step(q, sigma, alpha) with no rounding drift.
class RdpLedger {
 public:
  RdpLedger(double q, double sigma,
            std::vector<double> orders = default_rdp_orders());

  void add_steps(long long count = 1);

  double q() const { return q_; }
  double sigma() const { return sigma_; }
  long long steps() const { return steps_; }
  const std::vector<double>& orders() const { return orders_; }

  /// Accumulated epsilon(alpha) per order, aligned with orders().
  std::vector<double> eps_at_orders() const;

  /// epsilon = min over orders of steps * eps(alpha) + ln(1/delta) /
  /// (alpha - 1); zero steps report epsilon = 0.
  PrivacySpend to_epsilon_delta(double delta) const;

  /// {q, sigma, steps, orders, eps_at_order, epsilon, delta,
  /// argmin_order} as a JSON object; infinities appear as the string
  /// "inf".
  std::string to_json(double delta) const;

  /// Rebuilds a ledger from to_json output (q, sigma, steps, orders;
  /// per-order totals are recomputed).
  static RdpLedger from_json(const std::string& text);

 private:
  double q_;
  double sigma_;
  std::vector<double> orders_;
  std::vector<double> per_step_;
  long long steps_ = 0;
};

}  // namespace lipdp

#endif  // LIPDP_ACCOUNTANT_HPP
