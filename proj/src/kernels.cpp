#include "langdiff/kernels.hpp"

#include "langdiff/error.hpp"

#include <algorithm>
#include <cctype>

namespace langdiff {

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
    case ModelKind::M1: return "m1";
    case ModelKind::M2: return "m2";
    case ModelKind::M2L: return "m2l";
    case ModelKind::M3: return "m3";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "m1") return ModelKind::M1;
    if (lower == "m2") return ModelKind::M2;
    if (lower == "m2l") return ModelKind::M2L;
    if (lower == "m3") return ModelKind::M3;
    throw Error(Errc::InvalidConfig, "unknown model '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
    if (kind != ModelKind::M3) return;
    if (!std::isfinite(huber_delta) || huber_delta <= 0.0)
        throw Error(Errc::InvalidConfig, "huber_delta must be finite and > 0");
    if (!std::isfinite(laplace_b) || laplace_b <= 0.0)
        throw Error(Errc::InvalidConfig, "laplace_b must be finite and > 0");
}

double Params::sigma2() const noexcept { return sigma2_from_log(log_sigma2); }

FentonWilkinson fenton_wilkinson(double sigma2, double n) {
    if (!(n > 0.0) || !std::isfinite(n))
        throw Error(Errc::DomainError, "intent size must be finite and > 0");
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
        throw Error(Errc::DomainError, "sigma2 must be finite and >= 0");
    const double sigma_i2 = std::log1p(std::expm1(sigma2) / n);
    return {(sigma2 - sigma_i2) / 2.0, sigma_i2};
}

double huber(double a, double delta) noexcept {
    const double abs_a = std::abs(a);
    return abs_a <= delta ? 0.5 * a * a : delta * (abs_a - 0.5 * delta);
}

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178; // ln(2*pi)/2

} // namespace

IntentTerms intent_terms(const ModelSpec& spec, double log_n, double log_sigma2) noexcept {
    IntentTerms t;
    t.e_ls = std::exp(log_sigma2);
    const double sigma2 = kSigma2Floor + t.e_ls;
    if (spec.kind == ModelKind::M1) {
        t.mu = 0.0;
        t.v = sigma2;
        t.v_log_n = 0.0;
        t.v_s = 1.0;
    } else {
        const double n = std::exp(log_n);
        const double a = std::expm1(sigma2);
        t.v = std::log1p(a / n);
        t.mu = (sigma2 - t.v) / 2.0;
        t.v_log_n = -a / (n + a);
        t.v_s = (a + 1.0) / (n + a);
    }
    t.inv_v = 1.0 / t.v;
    if (spec.kind == ModelKind::M2L) {
        // Laplace(0, b) with variance 2 b^2 = v.
        const double b = std::sqrt(0.5 * t.v);
        t.inv_b = 1.0 / b;
        t.log_norm = -std::log(2.0 * b);
    } else {
        t.log_norm = -kHalfLog2Pi - 0.5 * std::log(t.v);
    }
    // z = ln y - log_n - d - (sigma2 - v) / 2
    t.z_log_n = -1.0 + 0.5 * t.v_log_n;
    t.z_s = -0.5 * (1.0 - t.v_s);
    return t;
}

CellEval evaluate_cell(const ModelSpec& spec, const IntentTerms& t, double log_n, double d,
                       double log_y) noexcept {
    const double z = log_y - log_n - d - t.mu;
    double f, f_z, f_v;
    switch (spec.kind) {
    case ModelKind::M2L: {
        const double abs_z = std::abs(z);
        f = t.log_norm - abs_z * t.inv_b;
        f_z = z > 0.0 ? -t.inv_b : (z < 0.0 ? t.inv_b : 0.0);
        f_v = -0.5 * t.inv_v + 0.5 * abs_z * t.inv_b * t.inv_v;
        break;
    }
    case ModelKind::M3: {
        const double delta = spec.huber_delta;
        const double h = huber(z, delta);
        f = t.log_norm - h * t.inv_v;
        f_z = -std::clamp(z, -delta, delta) * t.inv_v;
        f_v = -0.5 * t.inv_v + h * t.inv_v * t.inv_v;
        break;
    }
    default: {
        const double q = z * t.inv_v;
        f = t.log_norm - 0.5 * z * q;
        f_z = -q;
        f_v = -0.5 * t.inv_v + 0.5 * q * q;
        break;
    }
    }
    CellEval out;
    out.logp = f - log_y;
    out.d_log_n = f_z * t.z_log_n + f_v * t.v_log_n;
    out.d_d = -f_z;
    out.d_log_sigma2 = (f_z * t.z_s + f_v * t.v_s) * t.e_ls;
    return out;
}

double cell_value(const ModelSpec& spec, const IntentTerms& t, double log_n, double d,
                  double log_y) noexcept {
    const double z = log_y - log_n - d - t.mu;
    double f;
    switch (spec.kind) {
    case ModelKind::M2L: f = t.log_norm - std::abs(z) * t.inv_b; break;
    case ModelKind::M3: f = t.log_norm - huber(z, spec.huber_delta) * t.inv_v; break;
    default: f = t.log_norm - 0.5 * z * z * t.inv_v; break;
    }
    return f - log_y;
}

CellEval evaluate_cell(const ModelSpec& spec, double log_n, double d, double log_sigma2,
                       double y) noexcept {
    return evaluate_cell(spec, intent_terms(spec, log_n, log_sigma2), log_n, d, std::log(y));
}

double cell_value(const ModelSpec& spec, double log_n, double d, double log_sigma2,
                  double y) noexcept {
    return cell_value(spec, intent_terms(spec, log_n, log_sigma2), log_n, d, std::log(y));
}

namespace {

void check_cell(const Params& params, std::size_t i, std::size_t j, double y) {
    if (!(y > 0.0) || !std::isfinite(y))
        throw Error(Errc::DomainError, "surprisal must be finite and > 0");
    if (i >= params.log_n.size() || j >= params.d.size())
        throw Error(Errc::DomainError, "cell index out of range");
}

} // namespace

double cell_logdensity(const ModelSpec& spec, const Params& params, std::size_t i,
                       std::size_t j, double y) {
    check_cell(params, i, j, y);
    return cell_value(spec, params.log_n[i], params.d[j], params.log_sigma2, y);
}

CellGradient cell_gradient(const ModelSpec& spec, const Params& params, std::size_t i,
                           std::size_t j, double y) {
    check_cell(params, i, j, y);
    const CellEval e = evaluate_cell(spec, params.log_n[i], params.d[j], params.log_sigma2, y);
    return {e.d_log_n, e.d_d, e.d_log_sigma2};
}

} // namespace langdiff
