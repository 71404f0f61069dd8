#include "cocoa/zernike.hpp"

#include <cmath>
#include <mutex>

namespace cocoa {

bool zernike_valid(ZernikeIndex nm) {
    return nm.n >= 0 && std::abs(nm.m) <= nm.n && (nm.n - std::abs(nm.m)) % 2 == 0;
}

int ansi_index(ZernikeIndex nm) {
    if (!zernike_valid(nm))
        throw DomainError("invalid Zernike index (n=" + std::to_string(nm.n) +
                          ", m=" + std::to_string(nm.m) + ")");
    return (nm.n * (nm.n + 2) + nm.m) / 2;
}

ZernikeIndex from_ansi(int j) {
    if (j < 0) throw DomainError("ANSI Zernike index must be non-negative");
    int n = static_cast<int>(std::ceil((-3.0 + std::sqrt(9.0 + 8.0 * j)) / 2.0));
    int m = 2 * j - n * (n + 2);
    ZernikeIndex nm{n, m};
    if (!zernike_valid(nm) || ansi_index(nm) != j)
        throw DomainError("ANSI index inversion failed for j=" + std::to_string(j));
    return nm;
}

namespace {

// Radial polynomial coefficients c_k of R_n^{|m|} = Σ_k c_k ρ^{n-2k},
// cached per (n, |m|).
const std::vector<double>& radial_coeffs(int n, int m_abs) {
    static std::map<std::pair<int, int>, std::vector<double>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(n, m_abs);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    int kmax = (n - m_abs) / 2;
    std::vector<double> c(kmax + 1);
    for (int k = 0; k <= kmax; ++k) {
        double v = std::lgamma(n - k + 1.0) - std::lgamma(k + 1.0) -
                   std::lgamma((n + m_abs) / 2 - k + 1.0) - std::lgamma((n - m_abs) / 2 - k + 1.0);
        c[k] = ((k % 2) ? -1.0 : 1.0) * std::round(std::exp(v));
    }
    return cache.emplace(key, std::move(c)).first->second;
}

}  // namespace

double zernike_at(ZernikeIndex nm, double rho, double theta) {
    if (!zernike_valid(nm)) throw DomainError("invalid Zernike index");
    int m_abs = std::abs(nm.m);
    const auto& c = radial_coeffs(nm.n, m_abs);
    // Horner in ρ²: R = ρ^{m_abs} Σ_k c_k (ρ²)^{kmax-k} reordered
    double r2 = rho * rho;
    double r = 0.0;
    for (double ck : c) r = r * r2 + ck;  // c ordered k=0 (highest power) first
    for (int i = 0; i < m_abs; ++i) r *= rho;

    double norm = std::sqrt(2.0 * (nm.n + 1) / (nm.m == 0 ? 2.0 : 1.0));
    if (nm.m > 0) return norm * r * std::cos(nm.m * theta);
    if (nm.m < 0) return norm * r * std::sin(m_abs * theta);
    return norm * r;
}

WavefrontAberration::WavefrontAberration(std::map<int, double> c) : coeffs(std::move(c)) {
    for (const auto& [j, v] : coeffs) {
        from_ansi(j);  // validates
        if (!std::isfinite(v)) throw DomainError("non-finite Zernike coefficient");
    }
}

double WavefrontAberration::rms() const {
    double s = 0.0;
    for (const auto& [j, v] : coeffs) s += v * v;
    return std::sqrt(s);
}

double WavefrontAberration::get(int j) const {
    auto it = coeffs.find(j);
    return it == coeffs.end() ? 0.0 : it->second;
}

void WavefrontAberration::set(int j, double value) {
    from_ansi(j);
    coeffs[j] = value;
}

WavefrontAberration WavefrontAberration::negated() const {
    WavefrontAberration out;
    for (const auto& [j, v] : coeffs) out.coeffs[j] = -v;
    return out;
}

WavefrontAberration WavefrontAberration::plus(const WavefrontAberration& other) const {
    WavefrontAberration out = *this;
    for (const auto& [j, v] : other.coeffs) out.coeffs[j] += v;
    return out;
}

std::vector<int> default_mode_set() {
    std::vector<int> modes;
    for (int j = 3; j <= 20; ++j)
        if (j != 4) modes.push_back(j);
    return modes;
}

std::vector<int> low_order_modes() {
    std::vector<int> modes;
    for (int j : default_mode_set())
        if (from_ansi(j).n <= 4) modes.push_back(j);
    return modes;
}

std::vector<int> high_order_modes() {
    std::vector<int> modes;
    for (int j : default_mode_set())
        if (from_ansi(j).n == 5) modes.push_back(j);
    return modes;
}

WavefrontAberration random_mixed_aberration(double rms_target, const std::vector<int>& modes,
                                            Rng& rng) {
    if (rms_target < 0.0) throw DomainError("rms_target must be non-negative");
    if (modes.empty()) throw DomainError("mode set must be non-empty");
    WavefrontAberration a;
    double norm2 = 0.0;
    for (int j : modes) {
        if (j == 4) throw DomainError("defocus (ANSI 4) is not a valid mixed-aberration mode");
        from_ansi(j);
        double v = rng.uniform(-1.0, 1.0);
        a.coeffs[j] = v;
        norm2 += v * v;
    }
    if (norm2 == 0.0) {  // astronomically unlikely; retry deterministically
        return random_mixed_aberration(rms_target, modes, rng);
    }
    double scale = rms_target / std::sqrt(norm2);
    for (auto& [j, v] : a.coeffs) v *= scale;
    return a;
}

}  // namespace cocoa
