#include "pcop/operators.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <random>
#include <stdexcept>

#include "pcop/fft.hpp"

namespace pcop {

OperatorHandle::OperatorHandle(IndexBox domain, ApplyFn apply, ApplyFn apply_adjoint,
                               EntryFn entry) {
    impl_ = std::make_shared<Impl>();
    impl_->domain = std::move(domain);
    impl_->apply = std::move(apply);
    impl_->adjoint = std::move(apply_adjoint);
    impl_->entry = std::move(entry);
}

Eigen::VectorXd OperatorHandle::apply(const Eigen::VectorXd& f) const {
    if (f.size() != n()) throw std::invalid_argument("OperatorHandle::apply: size mismatch");
    ++impl_->n_apply;
    return impl_->apply(f);
}

Eigen::VectorXd OperatorHandle::apply_adjoint(const Eigen::VectorXd& f) const {
    if (f.size() != n()) throw std::invalid_argument("OperatorHandle::apply_adjoint: size mismatch");
    ++impl_->n_adjoint;
    return impl_->adjoint(f);
}

void OperatorHandle::reset_counters() const {
    impl_->n_apply = 0;
    impl_->n_adjoint = 0;
}

GridFunction to_grid_function(const IndexBox& box, const Eigen::VectorXd& v) {
    if (v.size() != box.num_points())
        throw std::invalid_argument("to_grid_function: size mismatch");
    GridFunction f(box);
    std::copy(v.data(), v.data() + v.size(), f.data());
    return f;
}

Eigen::VectorXd to_vector(const GridFunction& f) {
    return Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
}

OperatorHandle identity_operator(const IndexBox& domain) {
    auto id = [](const Eigen::VectorXd& f) { return f; };
    auto entry = [](const Point& y, const Point& x) { return y == x ? 1.0 : 0.0; };
    return {domain, id, id, entry};
}

OperatorHandle zero_operator(const IndexBox& domain) {
    auto zero = [](const Eigen::VectorXd& f) { return Eigen::VectorXd::Zero(f.size()).eval(); };
    auto entry = [](const Point&, const Point&) { return 0.0; };
    return {domain, zero, zero, entry};
}

OperatorHandle convolution_operator(const IndexBox& domain, GridFunction kernel) {
    auto kern = std::make_shared<GridFunction>(std::move(kernel));
    auto kern_flip = std::make_shared<GridFunction>(flip(*kern));
    auto apply = [domain, kern](const Eigen::VectorXd& f) {
        GridFunction g = fft_convolve(*kern, to_grid_function(domain, f));
        return to_vector(restrict_to(g, domain));
    };
    auto adjoint = [domain, kern_flip](const Eigen::VectorXd& f) {
        GridFunction g = fft_convolve(*kern_flip, to_grid_function(domain, f));
        return to_vector(restrict_to(g, domain));
    };
    auto entry = [kern](const Point& y, const Point& x) {
        Point z(y);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] -= x[i];
        return kern->value_or_zero(z);
    };
    return {domain, apply, adjoint, entry};
}

OperatorHandle multiplication_operator(const IndexBox& domain, GridFunction diag) {
    auto d = std::make_shared<GridFunction>(std::move(diag));
    auto apply = [d](const Eigen::VectorXd& f) {
        Eigen::VectorXd out = f;
        for (Eigen::Index i = 0; i < out.size(); ++i) out[i] *= d->values()[static_cast<std::size_t>(i)];
        return out;
    };
    auto entry = [d](const Point& y, const Point& x) { return y == x ? d->at(x) : 0.0; };
    return {domain, apply, apply, entry};
}

OperatorHandle dense_operator(const IndexBox& domain, Eigen::MatrixXd A) {
    auto m = std::make_shared<Eigen::MatrixXd>(std::move(A));
    GridFunction layout(domain);
    auto apply = [m](const Eigen::VectorXd& f) { return (*m * f).eval(); };
    auto adjoint = [m](const Eigen::VectorXd& f) { return (m->transpose() * f).eval(); };
    auto lin = std::make_shared<GridFunction>(domain);
    auto entry = [m, lin](const Point& y, const Point& x) {
        return (*m)(static_cast<Eigen::Index>(lin->linear_index(y)),
                    static_cast<Eigen::Index>(lin->linear_index(x)));
    };
    return {domain, apply, adjoint, entry};
}

double blur_coordinate(int n, Coord i) {
    return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
}

OperatorHandle blur_operator(int n, double sigma_in, double sigma_out) {
    if (n < 8) throw std::invalid_argument("blur_operator: n >= 8 required");
    const IndexBox domain({0, 0}, {n - 1, n - 1});
    const double h = 2.0 / static_cast<double>(n - 1);

    auto sigma_at = [n, sigma_in, sigma_out](const Point& x) {
        const double s = blur_coordinate(n, x[0]);
        const double t = blur_coordinate(n, x[1]);
        return (s * s + t * t < 0.5) ? sigma_in : sigma_out;
    };
    auto kernel_value = [h](const Point& z, double sigma) {
        const double r2 = h * h * static_cast<double>(z[0] * z[0] + z[1] * z[1]);
        return std::exp(-r2 / (2.0 * sigma * sigma));
    };

    // A f = G_in * (m_in . f) + G_out * (m_out . f); kernels on [-(n-1), n-1]^2.
    const IndexBox kbox({-(n - 1), -(n - 1)}, {n - 1, n - 1});
    auto g_in = std::make_shared<GridFunction>(kbox);
    auto g_out = std::make_shared<GridFunction>(kbox);
    for_each_point(kbox, [&](const Point& z) {
        g_in->at(z) = kernel_value(z, sigma_in);
        g_out->at(z) = kernel_value(z, sigma_out);
    });
    auto mask_in = std::make_shared<GridFunction>(domain);
    for_each_point(domain, [&](const Point& x) {
        mask_in->at(x) = (sigma_at(x) == sigma_in) ? 1.0 : 0.0;
    });

    auto apply = [domain, g_in, g_out, mask_in](const Eigen::VectorXd& f) {
        GridFunction fin = to_grid_function(domain, f);
        GridFunction fout = fin;
        multiply_into(fin, *mask_in);
        for (std::int64_t i = 0; i < fout.size(); ++i)
            fout.data()[i] -= fin.data()[i];  // complement mask
        GridFunction out(domain);
        accumulate(out, fft_convolve(*g_in, fin));
        accumulate(out, fft_convolve(*g_out, fout));
        return to_vector(out);
    };
    // adjoint: A^T f = m_in . (G_in * f) + m_out . (G_out * f) (kernels even).
    auto adjoint = [domain, g_in, g_out, mask_in](const Eigen::VectorXd& f) {
        GridFunction fgrid = to_grid_function(domain, f);
        GridFunction a = restrict_to(fft_convolve(*g_in, fgrid), domain);
        GridFunction b = restrict_to(fft_convolve(*g_out, fgrid), domain);
        GridFunction out(domain);
        for (std::int64_t i = 0; i < out.size(); ++i) {
            const double m = mask_in->data()[i];
            out.data()[i] = m * a.data()[i] + (1.0 - m) * b.data()[i];
        }
        return to_vector(out);
    };
    auto entry = [sigma_at, kernel_value](const Point& y, const Point& x) {
        Point z(y);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] -= x[i];
        return kernel_value(z, sigma_at(x));
    };
    return {domain, apply, adjoint, entry};
}

OperatorHandle varying_kernel_operator(const IndexBox& domain, std::uint64_t seed) {
    const int d = domain.dim();
    if (d > 2) throw std::invalid_argument("varying_kernel_operator: d <= 2");
    const std::int64_t N = domain.num_points();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // smooth fields: sigma(x) and amplitude(x) as low-order trig polynomials
    const double base_sigma = 1.5 + 3.0 * unif(rng);
    const double sigma_mod = 0.3 + 0.5 * unif(rng);
    const double amp_mod = 0.2 + 0.4 * unif(rng);
    std::vector<double> freq(static_cast<std::size_t>(d)), phase(static_cast<std::size_t>(d)),
        freq2(static_cast<std::size_t>(d)), phase2(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        freq[static_cast<std::size_t>(i)] = 1.0 + 2.0 * unif(rng);
        phase[static_cast<std::size_t>(i)] = 6.28 * unif(rng);
        freq2[static_cast<std::size_t>(i)] = 1.0 + 2.0 * unif(rng);
        phase2[static_cast<std::size_t>(i)] = 6.28 * unif(rng);
    }

    auto fields_at = [=](const Point& x) {
        double s = 0.0, a = 0.0;
        for (int i = 0; i < d; ++i) {
            const double u = static_cast<double>(x[static_cast<std::size_t>(i)] -
                                                 domain.lo[static_cast<std::size_t>(i)]) /
                             static_cast<double>(std::max<Coord>(1, domain.extent(i)));
            s += std::sin(freq[static_cast<std::size_t>(i)] * 6.2831853 * u +
                          phase[static_cast<std::size_t>(i)]);
            a += std::sin(freq2[static_cast<std::size_t>(i)] * 6.2831853 * u +
                          phase2[static_cast<std::size_t>(i)]);
        }
        const double sigma = base_sigma * (1.0 + sigma_mod * s / d);
        const double amp = 1.0 + amp_mod * a / d;
        return std::make_pair(sigma, amp);
    };
    auto entry_fn = [fields_at](const Point& y, const Point& x) {
        auto [sigma, amp] = fields_at(x);
        double r2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dz = static_cast<double>(y[i] - x[i]);
            r2 += dz * dz;
        }
        return amp * std::exp(-r2 / (2.0 * sigma * sigma));
    };

    Eigen::MatrixXd A(N, N);
    GridFunction layout(domain);
    for_each_point(domain, [&](const Point& x) {
        const auto col = static_cast<Eigen::Index>(layout.linear_index(x));
        for_each_point(domain, [&](const Point& y) {
            A(static_cast<Eigen::Index>(layout.linear_index(y)), col) = entry_fn(y, x);
        });
    });
    return dense_operator(domain, std::move(A));
}

namespace {

// 7/5-point FD Laplacian on the interior grid of (-1,1)^dim with n cells per
// axis; interior points are indexed 1..n-1 per axis, lexicographic.
Eigen::SparseMatrix<double> fd_laplacian(int dim, int n) {
    const int m = n - 1;  // interior points per axis
    std::int64_t N = 1;
    for (int i = 0; i < dim; ++i) N *= m;
    const double h = 2.0 / static_cast<double>(n);
    const double inv_h2 = 1.0 / (h * h);

    std::vector<std::int64_t> strides(static_cast<std::size_t>(dim), 1);
    for (int i = dim - 2; i >= 0; --i)
        strides[static_cast<std::size_t>(i)] = strides[static_cast<std::size_t>(i + 1)] * m;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * static_cast<std::size_t>(2 * dim + 1));
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (std::int64_t lin = 0; lin < N; ++lin) {
        trip.emplace_back(lin, lin, 2.0 * dim * inv_h2);
        for (int a = 0; a < dim; ++a) {
            if (idx[static_cast<std::size_t>(a)] > 0)
                trip.emplace_back(lin, lin - strides[static_cast<std::size_t>(a)], -inv_h2);
            if (idx[static_cast<std::size_t>(a)] < m - 1)
                trip.emplace_back(lin, lin + strides[static_cast<std::size_t>(a)], -inv_h2);
        }
        for (int a = dim - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < m) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    Eigen::SparseMatrix<double> K(N, N);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

}  // namespace

PoissonSchurProblem poisson_schur_operator(int dim, int n) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("poisson_schur_operator: dim in {2,3}");
    if (n < 6 || n % 2 != 0)
        throw std::invalid_argument("poisson_schur_operator: n must be even and >= 6");

    const std::int64_t m = n - 1;       // interior points per axis
    const std::int64_t zi = n / 2 - 1;  // interface layer (0-based within interior)
    const int dm = dim - 1;             // interface dimension

    const Eigen::SparseMatrix<double> K = fd_laplacian(dim, n);

    // Linear indices put the last axis fastest, so blocks of the FIRST axis
    // are contiguous: split on the hyperplane x_0 = 0 (n even puts an
    // interior layer exactly on it). b = layers [0,zi), i = layer zi,
    // t = layers (zi, m).
    std::int64_t n_iface = 1;
    for (int i = 0; i < dm; ++i) n_iface *= m;
    const std::int64_t b0 = 0, nb = zi * n_iface;
    const std::int64_t i0 = nb, ni = n_iface;
    const std::int64_t t0 = nb + ni, nt = (m - 1 - zi) * n_iface;

    auto sub_block = [&](std::int64_t r0, std::int64_t nr, std::int64_t c0, std::int64_t nc) {
        std::vector<Eigen::Triplet<double>> trip;
        for (std::int64_t col = c0; col < c0 + nc; ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it)
                if (it.row() >= r0 && it.row() < r0 + nr)
                    trip.emplace_back(it.row() - r0, col - c0, it.value());
        Eigen::SparseMatrix<double> B(nr, nc);
        B.setFromTriplets(trip.begin(), trip.end());
        return B;
    };

    auto K_tt = std::make_shared<Eigen::SparseMatrix<double>>(sub_block(t0, nt, t0, nt));
    auto K_bb = std::make_shared<Eigen::SparseMatrix<double>>(sub_block(b0, nb, b0, nb));
    auto K_ti = std::make_shared<Eigen::SparseMatrix<double>>(sub_block(t0, nt, i0, ni));
    auto K_it = std::make_shared<Eigen::SparseMatrix<double>>(sub_block(i0, ni, t0, nt));
    auto K_bi = std::make_shared<Eigen::SparseMatrix<double>>(sub_block(b0, nb, i0, ni));
    auto K_ib = std::make_shared<Eigen::SparseMatrix<double>>(sub_block(i0, ni, b0, nb));

    auto tt_solver = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    tt_solver->compute(*K_tt);
    auto bb_solver = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    bb_solver->compute(*K_bb);
    if (tt_solver->info() != Eigen::Success || bb_solver->info() != Eigen::Success)
        throw std::runtime_error("poisson_schur_operator: sub-block factorization failed");

    auto solves = std::make_shared<std::atomic<std::int64_t>>(0);

    auto apply = [=](const Eigen::VectorXd& f) {
        Eigen::VectorXd vt = *K_ti * f;
        Eigen::VectorXd vb = *K_bi * f;
        Eigen::VectorXd wt = tt_solver->solve(vt);
        Eigen::VectorXd wb = bb_solver->solve(vb);
        *solves += 2;
        return (*K_it * wt + *K_ib * wb).eval();
    };

    Point lo(static_cast<std::size_t>(dm), 0), hi(static_cast<std::size_t>(dm), m - 1);
    PoissonSchurProblem out;
    out.interface_domain = IndexBox(lo, hi);
    out.handle = OperatorHandle(out.interface_domain, apply, apply);  // symmetric
    out.K_ii = sub_block(i0, ni, i0, ni);
    out.solve_count = solves;
    return out;
}

OperatorHandle make_operator_by_name(const std::string& name, int n) {
    if (name == "blur") return blur_operator(n);
    if (name == "blur-single") return blur_operator(n, 0.1, 0.1);
    if (name == "poisson-schur-2d") return poisson_schur_operator(2, n).handle;
    if (name == "poisson-schur-3d") return poisson_schur_operator(3, n).handle;
    throw std::invalid_argument("unknown operator: " + name);
}

}  // namespace pcop
