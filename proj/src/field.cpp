#include "actionforge/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace actionforge {

Grid::Grid(int dim_, int n_, double length_) : dim(dim_), n(n_), length(length_) {
    if (dim != 1 && dim != 3) throw std::invalid_argument("grid dimension must be 1 or 3");
    if (n < 8 || !std::has_single_bit(static_cast<unsigned>(n))) {
        throw std::invalid_argument("grid points per axis must be a power of two >= 8, got " +
                                    std::to_string(n));
    }
    if (!(length > 0.0)) throw std::invalid_argument("grid length must be positive");
}

std::size_t Grid::size() const {
    std::size_t s = 1;
    for (int i = 0; i < dim; ++i) s *= static_cast<std::size_t>(n);
    return s;
}

double Grid::cell_volume() const { return std::pow(dx(), dim); }

std::array<double, 3> Grid::point(std::size_t i) const {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int axis = dim - 1; axis >= 0; --axis) {
        x[axis] = static_cast<double>(i % n) * dx();
        i /= n;
    }
    return x;
}

std::array<double, 3> Grid::wavevector(std::size_t i) const {
    std::array<double, 3> k{0.0, 0.0, 0.0};
    const double unit = 2.0 * 3.141592653589793238462643 / length;
    for (int axis = dim - 1; axis >= 0; --axis) {
        k[axis] = unit * mode_number(static_cast<int>(i % n));
        i /= n;
    }
    return k;
}

Field::Field(Grid g, FieldTag t) : grid(g), values(g.size(), cplx(0.0)), tag(t) {}

Field::Field(Grid g, std::vector<cplx> v, FieldTag t) : grid(g), values(std::move(v)), tag(t) {
    if (values.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
}

Field Field::sample(const Grid& g, const std::function<cplx(const std::array<double, 3>&)>& fn) {
    Field f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = fn(g.point(i));
    return f;
}

double Field::imaginary_residue() const {
    Field p = to_physical(*this);
    double max_abs = 0.0, max_im = 0.0;
    for (const cplx& v : p.values) {
        max_abs = std::max(max_abs, std::abs(v));
        max_im = std::max(max_im, std::abs(v.imag()));
    }
    return max_abs > 0.0 ? max_im / max_abs : 0.0;
}

namespace {

void check_compatible(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("fields live on different grids");
    if (a.tag != b.tag) throw std::invalid_argument("fields have different tags");
}

}  // namespace

Field& Field::operator+=(const Field& other) {
    check_compatible(*this, other);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
    return *this;
}

Field& Field::operator-=(const Field& other) {
    check_compatible(*this, other);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= other.values[i];
    return *this;
}

Field& Field::operator*=(cplx c) {
    for (cplx& v : values) v *= c;
    return *this;
}

// ---------------------------------------------------------------------------
// FFTW plans are created once per (dim, n, direction); creation is not
// thread-safe, execution on fresh arrays is.

namespace {

fftw_plan plan_for(const Grid& g, int sign) {
    static std::mutex mutex;
    static std::map<std::tuple<int, int, int>, fftw_plan> plans;
    std::lock_guard lock(mutex);
    auto key = std::make_tuple(g.dim, g.n, sign);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    std::vector<cplx> a(g.size()), b(g.size());
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan p = g.dim == 1 ? fftw_plan_dft_1d(g.n, in, out, sign, flags)
                             : fftw_plan_dft_3d(g.n, g.n, g.n, in, out, sign, flags);
    if (p == nullptr) throw std::runtime_error("FFTW plan creation failed");
    plans.emplace(key, p);
    return p;
}

void execute(const Grid& g, int sign, std::span<const cplx> in, std::span<cplx> out) {
    if (in.size() != g.size() || out.size() != g.size()) {
        throw std::invalid_argument("transform buffer size does not match grid");
    }
    fftw_plan p = plan_for(g, sign);
    if (in.data() == out.data()) {
        std::vector<cplx> copy(in.begin(), in.end());
        fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(copy.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
    } else {
        // FFTW does not write to the input of an out-of-place c2c plan.
        fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                         reinterpret_cast<fftw_complex*>(out.data()));
    }
}

}  // namespace

void fft_forward(const Grid& g, std::span<const cplx> in, std::span<cplx> out) {
    execute(g, FFTW_FORWARD, in, out);
}

void fft_inverse(const Grid& g, std::span<const cplx> in, std::span<cplx> out) {
    execute(g, FFTW_BACKWARD, in, out);
    const double scale = 1.0 / static_cast<double>(g.size());
    for (cplx& v : out) v *= scale;
}

Field to_spectral(const Field& f) {
    if (f.tag == FieldTag::spectral) return f;
    Field out(f.grid, FieldTag::spectral);
    fft_forward(f.grid, f.values, out.values);
    return out;
}

Field to_physical(const Field& f) {
    if (f.tag == FieldTag::physical) return f;
    Field out(f.grid, FieldTag::physical);
    fft_inverse(f.grid, f.values, out.values);
    return out;
}

std::vector<cplx> spatial_symbol(const DiffOp& op, const Grid& g) {
    if (!op.is_time_free()) {
        throw std::invalid_argument("spatial operator contains time derivatives: " + to_string(op));
    }
    if (op.dim() != g.dim) throw std::invalid_argument("operator and grid dimensions differ");
    // The Nyquist wavenumber -n/2 aliases +n/2. Averaging the symbol over both
    // keeps real operators real on real data (odd orders vanish there).
    const double nyquist = std::numbers::pi * g.n / g.length;
    std::vector<cplx> sym(g.size());
    for (std::size_t i = 0; i < sym.size(); ++i) {
        auto k = g.wavevector(i);
        std::array<int, 3> nyq_axes{};
        int count = 0;
        for (int a = 0; a < g.dim; ++a) {
            if (std::abs(k[a] + nyquist) < 1e-9 * nyquist) nyq_axes[count++] = a;
        }
        cplx acc = 0.0;
        for (int mask = 0; mask < (1 << count); ++mask) {
            auto kk = k;
            for (int b = 0; b < count; ++b) {
                if (mask & (1 << b)) kk[nyq_axes[b]] = nyquist;
            }
            acc += symbol_eval(op, cplx(0.0), std::span<const double>(kk.data(), g.dim));
        }
        sym[i] = acc / static_cast<double>(1 << count);
    }
    return sym;
}

Field apply_spatial(const DiffOp& op, const Field& f) {
    std::vector<cplx> sym = spatial_symbol(op, f.grid);
    Field spec = to_spectral(f);
    for (std::size_t i = 0; i < sym.size(); ++i) spec.values[i] *= sym[i];
    if (f.tag == FieldTag::spectral) return spec;
    Field out = to_physical(spec);
    // Real operator on real data: the imaginary part is transform round-off.
    bool real_input = op.is_real() && std::all_of(f.values.begin(), f.values.end(),
                                                  [](const cplx& v) { return v.imag() == 0.0; });
    if (real_input) {
        for (cplx& v : out.values) v = cplx(v.real(), 0.0);
    }
    return out;
}

Field truncate_real(const Field& f, double rel_tol) {
    Field p = to_physical(f);
    double residue = p.imaginary_residue();
    if (residue > rel_tol) {
        std::ostringstream msg;
        msg << "field expected real has imaginary residue " << residue << " > " << rel_tol;
        throw std::domain_error(msg.str());
    }
    for (cplx& v : p.values) v = cplx(v.real(), 0.0);
    return p;
}

Field periodic_gaussian(const Grid& g, double center, double sigma, double amp) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian width must be positive");
    Field f(g, FieldTag::spectral);
    // One axis: c_k = (n / L) sigma sqrt(2 pi) exp(-k^2 sigma^2 / 2 - i k center); 3D is the product.
    const double axis_scale = g.n / g.length * sigma * std::sqrt(2.0 * std::numbers::pi);
    const double nyquist = std::numbers::pi * g.n / g.length;
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto k = g.wavevector(i);
        cplx v = amp;
        for (int a = 0; a < g.dim; ++a) {
            double mag = axis_scale * std::exp(-0.5 * k[a] * k[a] * sigma * sigma);
            // The Nyquist coefficient of a real field is real: average the +-k phases.
            double phase = k[a] * center;
            v *= std::abs(k[a] + nyquist) < 1e-9 * nyquist ? cplx(mag * std::cos(phase), 0.0)
                                                            : mag * std::exp(cplx(0.0, -phase));
        }
        f.values[i] = v;
    }
    return f;
}

double integrate(const Field& f) {
    if (f.tag != FieldTag::physical) throw std::invalid_argument("integrate needs a physical field");
    double sum = 0.0;
    for (const cplx& v : f.values) sum += v.real();
    return sum * f.grid.cell_volume();
}

double l2_norm(const Field& f) {
    Field p = to_physical(f);
    double sum = 0.0;
    for (const cplx& v : p.values) sum += std::norm(v);
    return std::sqrt(sum * p.grid.cell_volume());
}

double l2_distance(const Field& f, const Field& g) {
    if (!(f.grid == g.grid)) throw std::invalid_argument("l2_distance: grid mismatch");
    Field a = to_physical(f), b = to_physical(g);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::norm(a.values[i] - b.values[i]);
    return std::sqrt(sum * a.grid.cell_volume());
}

// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const Field& f) {
    if (f.grid.dim != 1) throw std::invalid_argument("CSV export is 1D only");
    Field p = to_physical(f);
    auto old = out.precision(17);
    out << "x,value\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        out << p.grid.point(i)[0] << ',' << p.values[i].real() << '\n';
    }
    out.precision(old);
}

Field read_csv(std::istream& in, const Grid& g) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,value", 0) != 0) {
        throw std::invalid_argument("CSV field: missing 'x,value' header");
    }
    Field f(g);
    std::size_t i = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos || i >= f.size()) throw std::invalid_argument("CSV field: bad row");
        f.values[i++] = cplx(std::stod(line.substr(comma + 1)), 0.0);
    }
    if (i != f.size()) throw std::invalid_argument("CSV field: row count does not match grid");
    return f;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::invalid_argument("binary field: truncated input");
    return value;
}

}  // namespace

void write_binary(std::ostream& out, const Field& f) {
    Field p = to_physical(f);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(p.grid.dim));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(p.grid.n));
    for (const cplx& v : p.values) put_le<double>(out, v.real());
}

Field read_binary(std::istream& in, double length) {
    auto dim = get_le<std::uint64_t>(in);
    auto n = get_le<std::uint64_t>(in);
    Grid g(static_cast<int>(dim), static_cast<int>(n), length);
    Field f(g);
    for (cplx& v : f.values) v = cplx(get_le<double>(in), 0.0);
    return f;
}

}  // namespace actionforge
