#include "clvmap.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "clvmap/approx.hpp"
#include "clvmap/map.hpp"
#include "clvmap/mobius.hpp"
#include "clvmap/oracle.hpp"
#include "clvmap/splitting.hpp"
#include "clvmap/stats.hpp"
#include "clvmap/tangent.hpp"

namespace {

thread_local std::string g_last_error;

clv_status fail(clv_status code, const char* what) {
    g_last_error = what ? what : "unknown error";
    return code;
}

template <class Fn>
clv_status guarded(Fn&& fn) {
    try {
        fn();
        return CLV_OK;
    } catch (const std::invalid_argument& e) {
        return fail(CLV_ERR_PARAM, e.what());
    } catch (const std::domain_error& e) {
        return fail(CLV_ERR_NUMERIC, e.what());
    } catch (const std::bad_alloc& e) {
        return fail(CLV_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(CLV_ERR_NUMERIC, e.what());
    }
}

clv_status require(bool ok, const char* what) {
    return ok ? CLV_OK : fail(CLV_ERR_PARAM, what);
}

clv::Geometry to_geometry(clv_geometry g) {
    return g == CLV_GEOM_PLANE ? clv::Geometry::Plane : clv::Geometry::Torus;
}

clv_jacobian to_c(const clv::Jacobian2& j) {
    clv_jacobian out;
    out.a = j.a;
    out.b = j.b;
    out.c = j.c;
    out.d = j.d;
    out.grad_a[0] = j.grad_a.x;
    out.grad_a[1] = j.grad_a.y;
    out.grad_b[0] = j.grad_b.x;
    out.grad_b[1] = j.grad_b.y;
    out.grad_c[0] = j.grad_c.x;
    out.grad_c[1] = j.grad_c.y;
    out.grad_d[0] = j.grad_d.x;
    out.grad_d[1] = j.grad_d.y;
    out.det = j.det;
    return out;
}

clv::Jacobian2 from_c(const clv_jacobian& j) {
    clv::Jacobian2 out;
    out.a = j.a;
    out.b = j.b;
    out.c = j.c;
    out.d = j.d;
    out.grad_a = {j.grad_a[0], j.grad_a[1]};
    out.grad_b = {j.grad_b[0], j.grad_b[1]};
    out.grad_c = {j.grad_c[0], j.grad_c[1]};
    out.grad_d = {j.grad_d[0], j.grad_d[1]};
    out.det = j.det;
    return out;
}

}  // namespace

struct clv_map {
    std::unique_ptr<clv::MapModel> model;
};

struct clv_tangent {
    const clv_map* map = nullptr;
    clv_engine engine = CLV_ENGINE_SCALAR;
    clv::PlanarPoint p;
    clv::TangentState state;
    clv::FtleAccumulator acc;
    std::uint64_t step = 0;
};

struct clv_hist1 {
    clv::Histogram1D h;
};
struct clv_hist2 {
    clv::Histogram2D h;
};
struct clv_cond1 {
    clv::ConditionalSplit1D c;
    clv_hist1 pos_view;
    clv_hist1 neg_view;
};
struct clv_field {
    clv::MeanField f;
};

extern "C" {

const char* clv_version(void) { return CLVMAP_VERSION_STRING; }

const char* clv_last_error(void) { return g_last_error.c_str(); }

clv_status clv_map_create_ct(double K, clv_geometry geom, clv_map** out) {
    if (auto rc = require(out != nullptr, "null output pointer")) return rc;
    return guarded([&] { *out = new clv_map{std::make_unique<clv::CtMap>(K, to_geometry(geom))}; });
}

clv_status clv_map_create_mcmillan_coeffs(double linear, double sine, double cosine,
                                          double quadratic, clv_geometry geom, clv_map** out) {
    if (auto rc = require(out != nullptr, "null output pointer")) return rc;
    return guarded([&] {
        *out = new clv_map{std::make_unique<clv::CoeffMcMillanMap>(linear, sine, cosine, quadratic,
                                                                   to_geometry(geom))};
    });
}

clv_status clv_map_create_mcmillan_cb(clv_scalar_fn f, clv_scalar_fn fprime, clv_scalar_fn fsecond,
                                      void* user, clv_geometry geom, clv_map** out) {
    if (auto rc = require(out && f && fprime && fsecond, "null callback or output")) return rc;
    return guarded([&] {
        *out = new clv_map{std::make_unique<clv::CallbackMcMillanMap>(
            [f, user](double x) { return f(x, user); },
            [fprime, user](double x) { return fprime(x, user); },
            [fsecond, user](double x) { return fsecond(x, user); }, to_geometry(geom))};
    });
}

clv_status clv_map_create_generic_cb(clv_generic_step_fn forward, clv_generic_step_fn inverse,
                                     clv_generic_jac_fn jac, void* user, clv_geometry geom,
                                     clv_map** out) {
    if (auto rc = require(out && forward && jac, "null callback or output")) return rc;
    return guarded([&] {
        clv::CallbackGenericMap::StepFn fwd = [forward, user](clv::PlanarPoint p) {
            double xy[2];
            forward(p.x, p.y, xy, user);
            return clv::PlanarPoint{xy[0], xy[1]};
        };
        clv::CallbackGenericMap::StepFn inv;
        if (inverse) {
            inv = [inverse, user](clv::PlanarPoint p) {
                double xy[2];
                inverse(p.x, p.y, xy, user);
                return clv::PlanarPoint{xy[0], xy[1]};
            };
        }
        clv::CallbackGenericMap::JacFn jf = [jac, user](clv::PlanarPoint p) {
            clv_jacobian j;
            jac(p.x, p.y, &j, user);
            return from_c(j);
        };
        *out = new clv_map{std::make_unique<clv::CallbackGenericMap>(std::move(fwd), std::move(inv),
                                                                     std::move(jf),
                                                                     to_geometry(geom))};
    });
}

clv_status clv_map_create_henon(double a, double b, clv_map** out) {
    if (auto rc = require(out != nullptr, "null output pointer")) return rc;
    return guarded([&] { *out = new clv_map{std::make_unique<clv::HenonMap>(a, b)}; });
}

void clv_map_free(clv_map* m) { delete m; }

clv_status clv_map_step(const clv_map* m, double x, double y, double out_xy[2]) {
    if (auto rc = require(m && out_xy, "null map or output")) return rc;
    return guarded([&] {
        const clv::PlanarPoint q = m->model->step({x, y});
        out_xy[0] = q.x;
        out_xy[1] = q.y;
    });
}

clv_status clv_map_inverse_step(const clv_map* m, double x, double y, double out_xy[2]) {
    if (auto rc = require(m && out_xy, "null map or output")) return rc;
    return guarded([&] {
        const clv::PlanarPoint q = m->model->inverse_step({x, y});
        out_xy[0] = q.x;
        out_xy[1] = q.y;
    });
}

clv_status clv_map_jacobian(const clv_map* m, double x, double y, clv_jacobian* out) {
    if (auto rc = require(m && out, "null map or output")) return rc;
    return guarded([&] { *out = to_c(m->model->jacobian({x, y})); });
}

int clv_map_is_mcmillan(const clv_map* m) {
    return m && m->model->mcmillan() != nullptr ? 1 : 0;
}

clv_status clv_map_fixed_points(const clv_map* m, uint32_t resolution, clv_fixed_point* out,
                                size_t cap, size_t* count) {
    if (auto rc = require(m && count, "null map or count")) return rc;
    return guarded([&] {
        const auto* mm = m->model->mcmillan();
        if (!mm) throw std::invalid_argument("fixed points require a standard-like map");
        const auto reports = clv::fixed_points(*mm, static_cast<int>(resolution));
        *count = reports.size();
        if (!out) return;
        const std::size_t n = std::min(cap, reports.size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto& r = reports[i];
            out[i].x = r.location.x;
            out[i].y = r.location.y;
            out[i].trace = r.trace;
            out[i].cls = static_cast<int>(r.cls);
            out[i].chi_plus_re = r.chi_plus.real();
            out[i].chi_plus_im = r.chi_plus.imag();
            out[i].chi_minus_re = r.chi_minus.real();
            out[i].chi_minus_im = r.chi_minus.imag();
            out[i].lyapunov = r.lyapunov;
            out[i].slope_plus = r.slope_plus;
            out[i].slope_minus = r.slope_minus;
        }
    });
}

double clv_slope_step(double psi, double fprime) { return clv::slope_step(psi, fprime); }
double clv_eta_step(double eta, double psi, double fsecond) {
    return clv::eta_step(eta, psi, fsecond);
}
double clv_curvature(double psi, double eta) { return clv::curvature(psi, eta); }
double clv_log_curvature(double psi, double eta) { return clv::log_curvature(psi, eta); }
double clv_one_step_exponent(double psi) { return clv::one_step_exponent(psi); }
double clv_expanding_factor(double psi_n, double psi_next) {
    return clv::expanding_factor(psi_n, psi_next);
}
double clv_direction_angle(double psi) { return clv::direction_angle(psi); }
double clv_splitting_angle(double psi_plus, double psi_minus) {
    return clv::splitting_angle(psi_plus, psi_minus);
}

clv_status clv_tangent_create(const clv_map* m, clv_engine engine, double x0, double y0,
                              double psi0, int sigma0, double eta0, clv_tangent** out) {
    if (auto rc = require(m && out, "null map or output")) return rc;
    return guarded([&] {
        if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(psi0) ||
            !std::isfinite(eta0))
            throw std::invalid_argument("tangent seed must be finite");
        if (sigma0 != 1 && sigma0 != -1) throw std::invalid_argument("sigma must be +1 or -1");
        if (engine == CLV_ENGINE_SCALAR && !m->model->mcmillan())
            throw std::invalid_argument("scalar engine requires a standard-like map");
        auto* t = new clv_tangent;
        t->map = m;
        t->engine = engine;
        t->p = clv::wrap_point({x0, y0}, m->model->geometry());
        t->state = clv::TangentState{psi0, sigma0, eta0, false};
        *out = t;
    });
}

clv_status clv_tangent_create_seeded(const clv_map* m, clv_engine engine, double x0, double y0,
                                     uint64_t seed, clv_tangent** out) {
    if (auto rc = require(m && out, "null map or output")) return rc;
    clv::SplitMix64 rng(seed);
    const clv::TangentState s = clv::seeded_state(rng);
    return clv_tangent_create(m, engine, x0, y0, s.psi, s.sigma, s.eta, out);
}

clv_status clv_tangent_run(clv_tangent* t, uint64_t steps, clv_step_sink sink, void* user) {
    if (auto rc = require(t != nullptr, "null tangent handle")) return rc;
    return guarded([&] {
        bool stop = false;
        auto emit = [&](std::uint64_t n, clv::PlanarPoint p, clv::TangentState s) {
            if (!sink || stop) return;
            clv_step_record rec;
            rec.step = t->step + n;
            rec.x = p.x;
            rec.y = p.y;
            rec.psi = s.psi;
            rec.eta = s.eta;
            rec.lambda1 = clv::one_step_exponent(s.psi);
            rec.log_kappa = clv::log_curvature(s.psi, s.eta);
            rec.sigma = s.sigma;
            rec.singular = s.singular ? 1 : 0;
            if (sink(&rec, user) != 0) stop = true;
        };
        // The sink can request an early stop; state stays consistent because
        // the engines advance one full step at a time.
        if (t->engine == CLV_ENGINE_SCALAR) {
            const auto* mm = t->map->model->mcmillan();
            std::uint64_t done = 0;
            while (done < steps && !stop) {
                const std::uint64_t chunk = std::min<std::uint64_t>(steps - done, 65536);
                t->state = clv::evolve_scalar(*mm, t->p, t->state, chunk, t->acc,
                                              [&](std::uint64_t n, clv::PlanarPoint p,
                                                  clv::TangentState s) { emit(done + n, p, s); });
                done += chunk;
            }
            t->step += done;
        } else {
            std::uint64_t done = 0;
            while (done < steps && !stop) {
                const std::uint64_t chunk = std::min<std::uint64_t>(steps - done, 65536);
                t->state = clv::evolve_general(*t->map->model, t->p, t->state, chunk, t->acc,
                                               [&](std::uint64_t n, clv::PlanarPoint p,
                                                   clv::TangentState s) { emit(done + n, p, s); });
                done += chunk;
            }
            t->step += done;
        }
    });
}

clv_status clv_tangent_state_get(const clv_tangent* t, clv_tangent_state* out) {
    if (auto rc = require(t && out, "null tangent or output")) return rc;
    out->x = t->p.x;
    out->y = t->p.y;
    out->psi = t->state.psi;
    out->eta = t->state.eta;
    out->sigma = t->state.sigma;
    out->ftle_sum_log = t->acc.sum_log;
    out->ftle_steps = t->acc.steps;
    out->singular_events = t->acc.singular_events;
    return CLV_OK;
}

void clv_tangent_free(clv_tangent* t) { delete t; }

clv_status clv_observables_run(const clv_map* m, double x0, double y0,
                               const clv_observable_options* opt, clv_observable_sink sink,
                               void* user, clv_observable_summary* out_summary) {
    if (auto rc = require(m && opt, "null map or options")) return rc;
    return guarded([&] {
        const auto* mm = m->model->mcmillan();
        if (!mm) throw std::invalid_argument("observable stream requires a standard-like map");
        clv::ObservableOptions o;
        o.steps = opt->steps;
        o.transient = opt->transient;
        o.window = opt->window;
        o.overlap = opt->overlap;
        o.seed = opt->seed;
        bool stop = false;
        const clv::ObservableSummary s = clv::run_observables(
            *mm, clv::wrap_point({x0, y0}, mm->geometry()), o, [&](const clv::ObservableRecord& r) {
                if (!sink || stop) return;
                clv_observable_record rec;
                rec.step = r.step;
                rec.x = r.point.x;
                rec.y = r.point.y;
                rec.psi_plus = r.psi_plus;
                rec.psi_minus = r.psi_minus;
                rec.eta = r.eta;
                rec.theta = r.theta;
                rec.lambda1 = r.lambda1;
                rec.log_kappa = r.log_kappa;
                rec.sigma = r.sigma;
                rec.singular_plus = r.singular_plus ? 1 : 0;
                rec.singular_minus = r.singular_minus ? 1 : 0;
                rec.tangency = r.tangency ? 1 : 0;
                if (sink(&rec, user) != 0) stop = true;
            });
        if (out_summary) {
            out_summary->emitted = s.emitted;
            out_summary->transient_used = s.transient_used;
            out_summary->singular_plus = s.singular_plus;
            out_summary->singular_minus = s.singular_minus;
            out_summary->tangencies = s.tangencies;
            out_summary->ftle_sum_log = s.ftle.sum_log;
            out_summary->ftle_steps = s.ftle.steps;
            out_summary->ftle_singular = s.ftle.singular_events;
        }
    });
}

clv_status clv_preimage_chain(const clv_map* m, double x, double y, uint32_t order, double* out_y,
                              size_t cap) {
    if (auto rc = require(m && out_y, "null map or output")) return rc;
    return guarded([&] {
        const auto* mm = m->model->mcmillan();
        if (!mm) throw std::invalid_argument("preimage chain requires a standard-like map");
        const auto ys = clv::preimage_chain(*mm, {x, y}, order);
        if (cap < ys.size()) throw std::invalid_argument("preimage chain buffer too small");
        std::memcpy(out_y, ys.data(), ys.size() * sizeof(double));
    });
}

clv_status clv_cf_slope(const clv_map* m, double x, double y, uint32_t order, double* out,
                        int* truncation_singular) {
    if (auto rc = require(m && out, "null map or output")) return rc;
    return guarded([&] {
        const auto* mm = m->model->mcmillan();
        if (!mm) throw std::invalid_argument("cf_slope requires a standard-like map");
        bool sing = false;
        *out = clv::cf_slope(*mm, {x, y}, order, &sing);
        if (truncation_singular) *truncation_singular = sing ? 1 : 0;
    });
}

double clv_series_weight_bound(double lambda, uint32_t order, double fprime_max) {
    return fprime_max * std::exp(-2.0 * static_cast<double>(order) * lambda);
}

clv_status clv_benettin_ftle(const clv_map* m, double x0, double y0, uint64_t steps, double wx,
                             double wy, double* out) {
    if (auto rc = require(m && out, "null map or output")) return rc;
    return guarded([&] {
        *out = clv::benettin_ftle(*m->model, clv::wrap_point({x0, y0}, m->model->geometry()),
                                  steps, {wx, wy});
    });
}

clv_status clv_clv_directions(const clv_map* m, double x, double y, uint64_t warmup,
                              double* out_psi_plus, double* out_psi_minus) {
    if (auto rc = require(m && out_psi_plus && out_psi_minus, "null map or output")) return rc;
    return guarded([&] {
        const auto [pp, pm] = clv::clv_directions(
            *m->model, clv::wrap_point({x, y}, m->model->geometry()), warmup);
        *out_psi_plus = pp;
        *out_psi_minus = pm;
    });
}

clv_status clv_fd_curvature(const double* xs, const double* ys, size_t n, double* out) {
    if (auto rc = require(xs && ys && out, "null input or output")) return rc;
    return guarded([&] { *out = clv::fd_curvature({xs, n}, {ys, n}); });
}

clv_status clv_ensemble_decay(const clv_map* m, double x0, double y0, clv_quantity quantity,
                              uint32_t members, uint64_t steps, const uint64_t* sample_times,
                              size_t n_samples, uint64_t seed, uint32_t workers,
                              double* out_spread, uint64_t* out_singular) {
    if (auto rc = require(m && sample_times && out_spread, "null map, times, or output")) return rc;
    return guarded([&] {
        const auto* mm = m->model->mcmillan();
        if (!mm) throw std::invalid_argument("ensemble decay requires a standard-like map");
        const auto series = clv::ensemble_decay(
            *mm, clv::wrap_point({x0, y0}, mm->geometry()),
            quantity == CLV_QUANTITY_ETA ? clv::EnsembleQuantity::Eta : clv::EnsembleQuantity::Psi,
            members, steps, {sample_times, n_samples}, seed, workers);
        std::memcpy(out_spread, series.spread.data(), series.spread.size() * sizeof(double));
        if (out_singular) *out_singular = series.singular_events;
    });
}

clv_status clv_decay_fit_series(const double* times, const double* spread, size_t n,
                                clv_fit_model model, clv_decay_fit* out) {
    if (auto rc = require(times && spread && out, "null input or output")) return rc;
    return guarded([&] {
        const clv::DecayFit f = clv::rate_fit(
            {times, n}, {spread, n},
            model == CLV_FIT_EXPONENTIAL ? clv::FitModel::Exponential
            : model == CLV_FIT_POWER_LAW ? clv::FitModel::PowerLaw
                                         : clv::FitModel::Auto);
        out->model = f.model == clv::FitModel::PowerLaw ? CLV_FIT_POWER_LAW : CLV_FIT_EXPONENTIAL;
        out->rate = f.rate;
        out->residual = f.residual;
        out->window_first = f.first;
        out->window_last = f.last;
    });
}

clv_status clv_decay_fit_windowed(const double* times, const double* spread, size_t n,
                                  clv_fit_model model, clv_decay_fit* out) {
    if (auto rc = require(times && spread && out, "null input or output")) return rc;
    return guarded([&] {
        clv::DecaySeries s;
        s.times.assign(times, times + n);
        s.spread.assign(spread, spread + n);
        const clv::DecayFit f = clv::fit_decay_window(
            s, model == CLV_FIT_EXPONENTIAL ? clv::FitModel::Exponential
               : model == CLV_FIT_POWER_LAW ? clv::FitModel::PowerLaw
                                            : clv::FitModel::Auto);
        out->model = f.model == clv::FitModel::PowerLaw ? CLV_FIT_POWER_LAW : CLV_FIT_EXPONENTIAL;
        out->rate = f.rate;
        out->residual = f.residual;
        out->window_first = f.first;
        out->window_last = f.last;
    });
}

clv_status clv_hist1_create(double lo, double hi, uint32_t bins, clv_hist1** out) {
    if (auto rc = require(out != nullptr, "null output pointer")) return rc;
    return guarded([&] { *out = new clv_hist1{clv::Histogram1D(lo, hi, bins)}; });
}
void clv_hist1_free(clv_hist1* h) { delete h; }
clv_status clv_hist1_add(clv_hist1* h, double value) {
    if (auto rc = require(h != nullptr, "null histogram")) return rc;
    h->h.add(value);
    return CLV_OK;
}
clv_status clv_hist1_merge(clv_hist1* h, const clv_hist1* other) {
    if (auto rc = require(h && other, "null histogram")) return rc;
    return guarded([&] { h->h.merge(other->h); });
}
uint32_t clv_hist1_bins(const clv_hist1* h) { return h ? h->h.bins() : 0; }
double clv_hist1_bin_left(const clv_hist1* h, uint32_t i) { return h->h.bin_left(i); }
double clv_hist1_bin_right(const clv_hist1* h, uint32_t i) { return h->h.bin_right(i); }
uint64_t clv_hist1_count(const clv_hist1* h, uint32_t i) { return h->h.bin_count(i); }
uint64_t clv_hist1_underflow(const clv_hist1* h) { return h->h.underflow(); }
uint64_t clv_hist1_overflow(const clv_hist1* h) { return h->h.overflow(); }
uint64_t clv_hist1_non_finite(const clv_hist1* h) { return h->h.non_finite(); }
uint64_t clv_hist1_total(const clv_hist1* h) { return h->h.total(); }
clv_status clv_hist1_l1_distance(const clv_hist1* a, const clv_hist1* b, double* out) {
    if (auto rc = require(a && b && out, "null histogram or output")) return rc;
    return guarded([&] { *out = clv::Histogram1D::l1_distance(a->h, b->h); });
}

clv_status clv_hist2_create(double x_lo, double x_hi, uint32_t x_bins, double y_lo, double y_hi,
                            uint32_t y_bins, clv_hist2** out) {
    if (auto rc = require(out != nullptr, "null output pointer")) return rc;
    return guarded(
        [&] { *out = new clv_hist2{clv::Histogram2D(x_lo, x_hi, x_bins, y_lo, y_hi, y_bins)}; });
}
void clv_hist2_free(clv_hist2* h) { delete h; }
clv_status clv_hist2_add(clv_hist2* h, double x, double y) {
    if (auto rc = require(h != nullptr, "null histogram")) return rc;
    h->h.add(x, y);
    return CLV_OK;
}
clv_status clv_hist2_merge(clv_hist2* h, const clv_hist2* other) {
    if (auto rc = require(h && other, "null histogram")) return rc;
    return guarded([&] { h->h.merge(other->h); });
}
uint32_t clv_hist2_x_bins(const clv_hist2* h) { return h->h.x_bins(); }
uint32_t clv_hist2_y_bins(const clv_hist2* h) { return h->h.y_bins(); }
uint64_t clv_hist2_count(const clv_hist2* h, uint32_t i, uint32_t j) { return h->h.bin_count(i, j); }
uint64_t clv_hist2_total(const clv_hist2* h) { return h->h.total(); }
uint64_t clv_hist2_out_of_range(const clv_hist2* h) {
    return h->h.x_underflow() + h->h.x_overflow() + h->h.y_underflow() + h->h.y_overflow();
}
uint64_t clv_hist2_non_finite(const clv_hist2* h) { return h->h.non_finite(); }

clv_status clv_cond1_create(double lo, double hi, uint32_t bins, clv_cond1** out) {
    if (auto rc = require(out != nullptr, "null output pointer")) return rc;
    return guarded([&] {
        *out = new clv_cond1{clv::ConditionalSplit1D(lo, hi, bins),
                             clv_hist1{clv::Histogram1D(lo, hi, bins)},
                             clv_hist1{clv::Histogram1D(lo, hi, bins)}};
    });
}
void clv_cond1_free(clv_cond1* c) { delete c; }
clv_status clv_cond1_add(clv_cond1* c, double lambda1, double value) {
    if (auto rc = require(c != nullptr, "null conditional")) return rc;
    c->c.add(lambda1, value);
    return CLV_OK;
}
const clv_hist1* clv_cond1_positive(const clv_cond1* c) {
    auto* mut = const_cast<clv_cond1*>(c);
    mut->pos_view.h = c->c.positive();
    return &mut->pos_view;
}
const clv_hist1* clv_cond1_negative(const clv_cond1* c) {
    auto* mut = const_cast<clv_cond1*>(c);
    mut->neg_view.h = c->c.negative();
    return &mut->neg_view;
}
uint64_t clv_cond1_zero_bucket(const clv_cond1* c) { return c->c.zero_bucket(); }

clv_status clv_field_create(double x_lo, double x_hi, double y_lo, double y_hi, uint32_t nx,
                            uint32_t ny, clv_field** out) {
    if (auto rc = require(out != nullptr, "null output pointer")) return rc;
    return guarded([&] { *out = new clv_field{clv::MeanField(x_lo, x_hi, y_lo, y_hi, nx, ny)}; });
}
clv_status clv_field_create_torus(uint32_t nx, uint32_t ny, clv_field** out) {
    if (auto rc = require(out != nullptr, "null output pointer")) return rc;
    return guarded([&] { *out = new clv_field{clv::MeanField::torus(nx, ny)}; });
}
void clv_field_free(clv_field* f) { delete f; }
clv_status clv_field_add(clv_field* f, double x, double y, double value) {
    if (auto rc = require(f != nullptr, "null field")) return rc;
    f->f.add(x, y, value);
    return CLV_OK;
}
clv_status clv_field_merge(clv_field* f, const clv_field* other) {
    if (auto rc = require(f && other, "null field")) return rc;
    return guarded([&] { f->f.merge(other->f); });
}
uint32_t clv_field_nx(const clv_field* f) { return f->f.nx(); }
uint32_t clv_field_ny(const clv_field* f) { return f->f.ny(); }
double clv_field_mean(const clv_field* f, uint32_t i, uint32_t j) { return f->f.mean(i, j); }
uint64_t clv_field_count(const clv_field* f, uint32_t i, uint32_t j) { return f->f.count(i, j); }

clv_status clv_grid_theta(const clv_field* psi_plus, double* theta_out, uint8_t* cell_status_out,
                          size_t cap) {
    if (auto rc = require(psi_plus && theta_out && cell_status_out, "null field or output"))
        return rc;
    return guarded([&] {
        const clv::ThetaField t = clv::grid_split_field(psi_plus->f);
        if (cap < t.theta.size()) throw std::invalid_argument("grid_theta buffer too small");
        std::memcpy(theta_out, t.theta.data(), t.theta.size() * sizeof(double));
        std::memcpy(cell_status_out, t.status.data(), t.status.size());
    });
}

} /* extern "C" */
