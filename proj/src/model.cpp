#include "compabs/model.hpp"

#include "compabs/error.hpp"

#include <cmath>
#include <sstream>

namespace compabs {

IntervalBox::IntervalBox(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) throw DimensionError("interval box bounds differ in size");
    if (!lower.allFinite() || !upper.allFinite()) throw InvalidArgument("interval box has non-finite bounds");
    for (Eigen::Index j = 0; j < lower.size(); ++j)
        if (lower[j] > upper[j]) throw InvalidArgument("interval box has lower > upper");
}

IntervalBox IntervalBox::uniform(int dim, double lo, double hi) {
    return IntervalBox(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

bool IntervalBox::contains(const Vector& x, double tol) const {
    if (x.size() != lower.size()) return false;
    for (Eigen::Index j = 0; j < x.size(); ++j)
        if (x[j] < lower[j] - tol || x[j] > upper[j] + tol) return false;
    return true;
}

bool IntervalBox::contains(const IntervalBox& other, double tol) const {
    if (other.dim() != dim()) return false;
    for (int j = 0; j < dim(); ++j)
        if (other.lower[j] < lower[j] - tol || other.upper[j] > upper[j] + tol) return false;
    return true;
}

IntervalBox interval_image(const Matrix& G, const IntervalBox& box) {
    if (G.cols() != box.dim()) throw DimensionError("interval image: column count differs from box dimension");
    Vector lo = Vector::Zero(G.rows()), hi = Vector::Zero(G.rows());
    for (Eigen::Index r = 0; r < G.rows(); ++r) {
        for (Eigen::Index c = 0; c < G.cols(); ++c) {
            double a = G(r, c) * box.lower[c], b = G(r, c) * box.upper[c];
            lo[r] += std::min(a, b);
            hi[r] += std::max(a, b);
        }
    }
    return IntervalBox(lo, hi);
}

IntervalBox product(const std::vector<IntervalBox>& boxes) {
    int d = 0;
    for (const auto& b : boxes) d += b.dim();
    Vector lo(d), hi(d);
    int off = 0;
    for (const auto& b : boxes) {
        lo.segment(off, b.dim()) = b.lower;
        hi.segment(off, b.dim()) = b.upper;
        off += b.dim();
    }
    return IntervalBox(lo, hi);
}

namespace {

double phi_zero(double) { return 0.0; }
double phi_identity(double v) { return v; }
double phi_sin(double v) { return std::sin(v); }
double phi_tanh(double v) { return std::tanh(v); }
double phi_atan(double v) { return std::atan(v); }

struct Entry {
    const char* name;
    ScalarFunction fn;
};

constexpr Entry kRegistry[] = {
    {"sin", phi_sin}, {"identity", phi_identity}, {"zero", phi_zero}, {"tanh", phi_tanh}, {"atan", phi_atan},
};

}  // namespace

ScalarFunction lookup_nonlinearity(const std::string& name) {
    for (const auto& e : kRegistry)
        if (name == e.name) return e.fn;
    throw UnsupportedModel("unknown nonlinearity '" + name + "'");
}

std::vector<std::string> registered_nonlinearities() {
    std::vector<std::string> out;
    for (const auto& e : kRegistry) out.emplace_back(e.name);
    return out;
}

bool slope_restriction_holds(const SlopeRestrictedTerm& term, double tol) {
    auto fn = lookup_nonlinearity(term.phi);
    constexpr int kPoints = 81;
    for (int a = 0; a < kPoints; ++a) {
        double c = -10.0 + 20.0 * a / (kPoints - 1);
        for (int b = a + 1; b < kPoints; ++b) {
            double d = -10.0 + 20.0 * b / (kPoints - 1);
            double q = (fn(c) - fn(d)) / (c - d);
            if (q < term.slope_lo - tol || q > term.slope_hi + tol) return false;
        }
    }
    return true;
}

std::vector<std::string> subsystem_errors(const Subsystem& s, const std::string& label) {
    std::vector<std::string> e;
    auto add = [&](const std::string& what) { e.push_back(label + ": " + what); };
    const auto n = s.A.rows();
    if (s.A.cols() != n) add("A is not square");
    if (s.B.rows() != n) add("B row count differs from n");
    if (s.D.rows() != n) add("D row count differs from n");
    if (s.R.rows() != n) add("R row count differs from n");
    if (s.state_box.dim() != n) add("state box dimension differs from n");
    if (s.ext_input_box.dim() != s.B.cols()) add("external input box dimension differs from columns of B");
    if (s.int_input_box.dim() != s.D.cols()) add("internal input box dimension differs from columns of D");
    if (s.noise.dim() != s.R.cols()) add("noise dimension differs from columns of R");
    for (Eigen::Index j = 0; j < s.noise.std.size(); ++j)
        if (!(s.noise.std[j] > 0.0)) add("noise standard deviations must be positive");
    if (s.nonlinearity) {
        const auto& t = *s.nonlinearity;
        if (t.E.rows() != n || t.E.cols() != 1) add("E must be n x 1");
        if (t.F.rows() != 1 || t.F.cols() != n) add("F must be 1 x n");
        if (!(t.slope_lo <= t.slope_hi)) add("slope_lo must not exceed slope_hi");
        if (!(t.slope_hi > 0.0)) add("slope_hi must be positive");
        try {
            if (!slope_restriction_holds(t)) add("phi violates the declared slope bounds");
        } catch (const UnsupportedModel& ex) {
            add(ex.what());
        }
    }
    return e;
}

int Network::total_states() const {
    int t = 0;
    for (const auto& s : subsystems) t += s.n();
    return t;
}

int Network::total_internal() const {
    int t = 0;
    for (const auto& s : subsystems) t += s.p();
    return t;
}

int Network::total_noise() const {
    int t = 0;
    for (const auto& s : subsystems) t += s.q();
    return t;
}

namespace {

template <class F>
std::vector<int> offsets_of(const std::vector<Subsystem>& subs, F dim) {
    std::vector<int> off(subs.size() + 1, 0);
    for (std::size_t i = 0; i < subs.size(); ++i) off[i + 1] = off[i] + dim(subs[i]);
    return off;
}

}  // namespace

std::vector<int> Network::state_offsets() const {
    return offsets_of(subsystems, [](const Subsystem& s) { return s.n(); });
}

std::vector<int> Network::internal_offsets() const {
    return offsets_of(subsystems, [](const Subsystem& s) { return s.p(); });
}

std::vector<int> Network::noise_offsets() const {
    return offsets_of(subsystems, [](const Subsystem& s) { return s.q(); });
}

bool Network::is_linear() const {
    for (const auto& s : subsystems)
        if (!s.is_linear()) return false;
    return true;
}

ValidationReport validate_network(const Network& net) {
    ValidationReport rep;
    for (int i = 0; i < net.size(); ++i) {
        auto e = subsystem_errors(net.subsystems[i], "subsystem " + std::to_string(i));
        rep.errors.insert(rep.errors.end(), e.begin(), e.end());
    }
    if (net.subsystems.empty()) rep.errors.push_back("network has no subsystems");
    if (net.G.rows() != net.total_internal() || net.G.cols() != net.total_states()) {
        std::ostringstream os;
        os << "G is " << net.G.rows() << "x" << net.G.cols() << ", expected " << net.total_internal() << "x"
           << net.total_states();
        rep.errors.push_back(os.str());
    }
    if (!net.G.allFinite()) rep.errors.push_back("G has non-finite entries");
    rep.dimensions_ok = rep.errors.empty();
    if (!rep.dimensions_ok) return rep;

    std::vector<IntervalBox> xs, ws;
    for (const auto& s : net.subsystems) {
        xs.push_back(s.state_box);
        ws.push_back(s.int_input_box);
    }
    rep.image = interval_image(net.G, product(xs));
    rep.target = product(ws);
    rep.well_posed = rep.target.contains(rep.image, 1e-12);
    if (!rep.well_posed) rep.errors.push_back("interval image G*prod(X) is not contained in prod(W)");
    return rep;
}

Vector eval_dynamics(const Subsystem& s, const Vector& x, const Vector& nu, const Vector& w, const Vector& noise) {
    if (x.size() != s.n() || nu.size() != s.m() || w.size() != s.p() || noise.size() != s.q())
        throw DimensionError("eval_dynamics: argument sizes do not match the subsystem");
    Vector next = s.A * x + s.D * w + s.R * noise;
    if (s.m() > 0) next += s.B * nu;
    if (s.nonlinearity) {
        const auto& t = *s.nonlinearity;
        double v = (t.F * x)(0);
        next += t.E.col(0) * t.eval_phi(v);
    }
    return next;
}

}  // namespace compabs
