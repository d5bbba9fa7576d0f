#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace funreg {

enum class LossFamily { square, huber, bisquare };

/// Residual loss rho with score psi = rho' and IRLS weight psi(x)/x.
///
/// Normalizations: square loss is x^2/2 so its weight is identically 1 and
/// huber reduces to it inside the corner. The weight at x = 0 is the limit
/// psi'(0), which is 1 for every family here.
class RobustLoss {
public:
    RobustLoss(LossFamily family, double tuning) : family_(family), tuning_(tuning) {
        if (family != LossFamily::square && !(tuning > 0))
            throw std::invalid_argument("loss tuning constant must be > 0");
    }

    static RobustLoss square() { return RobustLoss(LossFamily::square, 1.0); }
    static RobustLoss huber(double c = 1.345) { return RobustLoss(LossFamily::huber, c); }
    static RobustLoss bisquare(double c = 4.685) { return RobustLoss(LossFamily::bisquare, c); }

    LossFamily family() const { return family_; }
    double tuning() const { return tuning_; }
    bool convex() const { return family_ != LossFamily::bisquare; }

    double rho(double x) const {
        switch (family_) {
            case LossFamily::square:
                return 0.5 * x * x;
            case LossFamily::huber: {
                const double a = std::abs(x);
                return a <= tuning_ ? 0.5 * x * x : tuning_ * a - 0.5 * tuning_ * tuning_;
            }
            case LossFamily::bisquare: {
                const double c2 = tuning_ * tuning_;
                if (std::abs(x) >= tuning_) return c2 / 6.0;
                const double u = 1.0 - (x * x) / c2;
                return c2 / 6.0 * (1.0 - u * u * u);
            }
        }
        return 0;
    }

    double psi(double x) const {
        switch (family_) {
            case LossFamily::square:
                return x;
            case LossFamily::huber:
                return x > tuning_ ? tuning_ : (x < -tuning_ ? -tuning_ : x);
            case LossFamily::bisquare: {
                if (std::abs(x) >= tuning_) return 0;
                const double u = 1.0 - (x * x) / (tuning_ * tuning_);
                return x * u * u;
            }
        }
        return 0;
    }

    double weight(double x) const {
        // psi(x)/x extended by its limit psi'(0) = 1 at the origin
        if (std::abs(x) < 1e-10) return 1.0;
        switch (family_) {
            case LossFamily::square:
                return 1.0;
            case LossFamily::huber: {
                const double a = std::abs(x);
                return a <= tuning_ ? 1.0 : tuning_ / a;
            }
            case LossFamily::bisquare: {
                if (std::abs(x) >= tuning_) return 0;
                const double u = 1.0 - (x * x) / (tuning_ * tuning_);
                return u * u;
            }
        }
        return 0;
    }

    std::string name() const {
        switch (family_) {
            case LossFamily::square: return "square";
            case LossFamily::huber: return "huber";
            case LossFamily::bisquare: return "bisquare";
        }
        return "?";
    }

private:
    LossFamily family_;
    double tuning_;
};

struct LossEval {
    double rho;
    double psi;
    double weight;
};

inline LossEval loss_eval(const RobustLoss& loss, double x) {
    return {loss.rho(x), loss.psi(x), loss.weight(x)};
}

inline RobustLoss make_loss(const std::string& name, double tuning = -1) {
    if (name == "square") return RobustLoss::square();
    if (name == "huber") return tuning > 0 ? RobustLoss::huber(tuning) : RobustLoss::huber();
    if (name == "bisquare") return tuning > 0 ? RobustLoss::bisquare(tuning) : RobustLoss::bisquare();
    throw std::invalid_argument("unknown loss family: " + name);
}

}  // namespace funreg
