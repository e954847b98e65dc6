#include "clvmap/mobius.hpp"

#include <stdexcept>

namespace clv {

double mobius_ftle(std::span<const double> gammas) {
    if (gammas.empty()) throw std::invalid_argument("mobius_ftle: empty sequence");
    double sum = 0.0;
    for (double g : gammas) {
        if (g == 0.0) throw std::domain_error("mobius_ftle: zero factor");
        sum += std::log(std::fabs(g));
    }
    return sum / static_cast<double>(gammas.size());
}

ConvergenceClass classify_convergence(double lambda_plus, double lambda_minus) {
    if (!(lambda_plus >= lambda_minus))
        throw std::invalid_argument("classify_convergence: requires lambda_plus >= lambda_minus");
    ConvergenceClass c;
    c.lambda_plus = lambda_plus;
    c.lambda_minus = lambda_minus;
    if (lambda_minus < 0.0 && lambda_plus > 0.0)
        c.kind = OrbitKind::Hyperbolic;
    else if (lambda_minus >= 0.0)
        c.kind = OrbitKind::PurelyExpansive;
    else
        c.kind = OrbitKind::PurelyContractive;

    const double gap = lambda_plus - lambda_minus;
    c.psi_rate = -gap;
    c.eta_rate_plus = -gap - lambda_plus;
    c.eta_rate_minus = -gap + lambda_minus;

    // Convergence holds exactly when the corresponding rate is negative:
    // eta_plus needs lambda_minus < 2 lambda_plus, eta_minus needs
    // 2 lambda_minus < lambda_plus; hyperbolic orbits satisfy both, the
    // purely expansive/contractive cases keep only their own side otherwise.
    c.psi_converges = gap > 0.0;
    c.eta_converges_plus = c.psi_converges && (c.eta_rate_plus < 0.0);
    c.eta_converges_minus = c.psi_converges && (c.eta_rate_minus < 0.0);
    return c;
}

}  // namespace clv
