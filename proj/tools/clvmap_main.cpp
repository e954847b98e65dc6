// clvmap command-line runner: orbit/field/joint/split/converge/approx
// experiment drivers over the clvmap shared library, with CSV artifacts and
// JSON sidecars. Deterministic: identical config + seed gives identical bytes.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "clvmap.h"

using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kTwoPi = 6.283185307179586476925286766559;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(clv_status rc) {
    if (rc == CLV_OK) return;
    const std::string msg = clv_last_error();
    switch (rc) {
        case CLV_ERR_PARAM: throw UsageError(msg);
        case CLV_ERR_IO: throw IoError(msg);
        default: throw NumericError(msg);
    }
}

struct Options {
    std::string map_family = "ct";
    double K = kTwoPi;
    std::string geometry = "torus";
    double henon_a = 1.4, henon_b = 0.3;
    double linear = 2.0, sine = 0.0, cosine = 0.0, quadratic = 0.0;
    double x0 = 1e-3, y0 = 2e-3;
    std::uint64_t steps = 100000;
    std::uint64_t seed = 1;
    std::string engine = "scalar";
    std::uint32_t grid = 0;  // 0 = per-command default
    std::uint32_t bins = 1000;
    std::uint32_t ensemble = 10000;
    std::uint32_t order = 2;
    std::string transient = "auto";
    std::uint32_t workers = 1;
    std::string out;
    int digits = 17;
    std::uint64_t stride = 1;
    std::string quantity = "psi";
    std::string fit = "auto";
    std::uint64_t window = 1000000;
    std::uint64_t overlap = 1000;
    std::uint32_t resolution = 10000;
    std::uint64_t warmup = 100;
    std::string config_path;
};

// ---------------------------------------------------------------- config io

using Applier = std::function<void(Options&, const std::string&)>;

std::uint64_t parse_u64(const std::string& s) {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw UsageError("invalid integer value '" + s + "'");
    return v;
}
double parse_real(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw UsageError("invalid real value '" + s + "'");
    return v;
}

const std::map<std::string, Applier>& config_keys() {
    static const std::map<std::string, Applier> keys = {
        {"map.family", [](Options& o, const std::string& v) { o.map_family = v; }},
        {"map.K", [](Options& o, const std::string& v) { o.K = parse_real(v); }},
        {"map.geometry", [](Options& o, const std::string& v) { o.geometry = v; }},
        {"map.a", [](Options& o, const std::string& v) { o.henon_a = parse_real(v); }},
        {"map.b", [](Options& o, const std::string& v) { o.henon_b = parse_real(v); }},
        {"map.linear", [](Options& o, const std::string& v) { o.linear = parse_real(v); }},
        {"map.sine", [](Options& o, const std::string& v) { o.sine = parse_real(v); }},
        {"map.cosine", [](Options& o, const std::string& v) { o.cosine = parse_real(v); }},
        {"map.quadratic", [](Options& o, const std::string& v) { o.quadratic = parse_real(v); }},
        {"x0", [](Options& o, const std::string& v) { o.x0 = parse_real(v); }},
        {"y0", [](Options& o, const std::string& v) { o.y0 = parse_real(v); }},
        {"steps", [](Options& o, const std::string& v) { o.steps = parse_u64(v); }},
        {"seed", [](Options& o, const std::string& v) { o.seed = parse_u64(v); }},
        {"engine", [](Options& o, const std::string& v) { o.engine = v; }},
        {"grid", [](Options& o, const std::string& v) { o.grid = (std::uint32_t)parse_u64(v); }},
        {"bins", [](Options& o, const std::string& v) { o.bins = (std::uint32_t)parse_u64(v); }},
        {"ensemble",
         [](Options& o, const std::string& v) { o.ensemble = (std::uint32_t)parse_u64(v); }},
        {"order", [](Options& o, const std::string& v) { o.order = (std::uint32_t)parse_u64(v); }},
        {"transient", [](Options& o, const std::string& v) { o.transient = v; }},
        {"workers",
         [](Options& o, const std::string& v) { o.workers = (std::uint32_t)parse_u64(v); }},
        {"out", [](Options& o, const std::string& v) { o.out = v; }},
        {"digits", [](Options& o, const std::string& v) { o.digits = (int)parse_u64(v); }},
        {"stride", [](Options& o, const std::string& v) { o.stride = parse_u64(v); }},
        {"quantity", [](Options& o, const std::string& v) { o.quantity = v; }},
        {"fit", [](Options& o, const std::string& v) { o.fit = v; }},
        {"window", [](Options& o, const std::string& v) { o.window = parse_u64(v); }},
        {"overlap", [](Options& o, const std::string& v) { o.overlap = parse_u64(v); }},
        {"resolution",
         [](Options& o, const std::string& v) { o.resolution = (std::uint32_t)parse_u64(v); }},
        {"warmup", [](Options& o, const std::string& v) { o.warmup = parse_u64(v); }},
    };
    return keys;
}

// Flat key=value file; '#' starts a comment. Values for keys already pinned
// on the command line are skipped (flags override the file).
void apply_config_file(Options& o, const std::string& path,
                       const std::vector<std::string>& flag_set_keys) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.pop_back();
        std::size_t b = 0;
        while (b < line.size() && (line[b] == ' ' || line[b] == '\t')) ++b;
        line.erase(0, b);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        const auto it = config_keys().find(key);
        if (it == config_keys().end()) throw UsageError("unknown config key '" + key + "'");
        if (std::find(flag_set_keys.begin(), flag_set_keys.end(), key) != flag_set_keys.end())
            continue;
        it->second(o, value);
    }
}

std::string format_real(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

// Resolved configuration echo: every key, in fixed order.
std::vector<std::pair<std::string, std::string>> config_echo(const Options& o) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("map.family", o.map_family);
    kv.emplace_back("map.K", format_real(o.K, 17));
    kv.emplace_back("map.geometry", o.geometry);
    kv.emplace_back("map.a", format_real(o.henon_a, 17));
    kv.emplace_back("map.b", format_real(o.henon_b, 17));
    kv.emplace_back("map.linear", format_real(o.linear, 17));
    kv.emplace_back("map.sine", format_real(o.sine, 17));
    kv.emplace_back("map.cosine", format_real(o.cosine, 17));
    kv.emplace_back("map.quadratic", format_real(o.quadratic, 17));
    kv.emplace_back("x0", format_real(o.x0, 17));
    kv.emplace_back("y0", format_real(o.y0, 17));
    kv.emplace_back("steps", std::to_string(o.steps));
    kv.emplace_back("seed", std::to_string(o.seed));
    kv.emplace_back("engine", o.engine);
    kv.emplace_back("grid", std::to_string(o.grid));
    kv.emplace_back("bins", std::to_string(o.bins));
    kv.emplace_back("ensemble", std::to_string(o.ensemble));
    kv.emplace_back("order", std::to_string(o.order));
    kv.emplace_back("transient", o.transient);
    kv.emplace_back("workers", std::to_string(o.workers));
    kv.emplace_back("out", o.out);
    kv.emplace_back("digits", std::to_string(o.digits));
    kv.emplace_back("stride", std::to_string(o.stride));
    kv.emplace_back("quantity", o.quantity);
    kv.emplace_back("fit", o.fit);
    kv.emplace_back("window", std::to_string(o.window));
    kv.emplace_back("overlap", std::to_string(o.overlap));
    kv.emplace_back("resolution", std::to_string(o.resolution));
    kv.emplace_back("warmup", std::to_string(o.warmup));
    return kv;
}

// ------------------------------------------------------------------- output

struct Csv {
    std::FILE* f = nullptr;
    int digits;

    Csv(const std::string& path, int digits_) : digits(digits_) {
        f = std::fopen(path.c_str(), "wb");
        if (!f) throw IoError("cannot open output file '" + path + "'");
    }
    ~Csv() {
        if (f) std::fclose(f);
    }
    Csv(const Csv&) = delete;
    Csv& operator=(const Csv&) = delete;

    void header(const char* h) { std::fprintf(f, "%s\n", h); }
    void real(double v, bool last = false) {
        std::fprintf(f, "%.*g%c", digits, v, last ? '\n' : ',');
    }
    void integer(std::uint64_t v, bool last = false) {
        std::fprintf(f, "%llu%c", static_cast<unsigned long long>(v), last ? '\n' : ',');
    }
    void signed_integer(std::int64_t v, bool last = false) {
        std::fprintf(f, "%lld%c", static_cast<long long>(v), last ? '\n' : ',');
    }
    void text(const char* s, bool last = false) { std::fprintf(f, "%s%c", s, last ? '\n' : ','); }
    void close() {
        if (f && std::fclose(f) != 0) {
            f = nullptr;
            throw IoError("write failure on CSV output");
        }
        f = nullptr;
    }
};

void write_sidecar(const Options& o, const std::string& command, const json& results) {
    json doc;
    doc["library"] = "clvmap";
    doc["version"] = clv_version();
    doc["command"] = command;
    json cfg;
    for (const auto& [k, v] : config_echo(o)) cfg[k] = v;
    doc["config"] = cfg;
    doc["results"] = results;

    std::ofstream js(o.out + ".json", std::ios::binary);
    if (!js) throw IoError("cannot open sidecar '" + o.out + ".json'");
    js << doc.dump(2) << "\n";
    if (!js) throw IoError("write failure on sidecar");

    std::ofstream cf(o.out + ".config", std::ios::binary);
    if (!cf) throw IoError("cannot open config echo '" + o.out + ".config'");
    for (const auto& [k, v] : config_echo(o)) cf << k << "=" << v << "\n";
    if (!cf) throw IoError("write failure on config echo");
}

// -------------------------------------------------------------------- maps

struct MapHandle {
    clv_map* m = nullptr;
    ~MapHandle() { clv_map_free(m); }
};

clv_geometry geometry_of(const Options& o) {
    if (o.geometry == "torus") return CLV_GEOM_TORUS;
    if (o.geometry == "plane") return CLV_GEOM_PLANE;
    throw UsageError("map.geometry must be torus or plane");
}

void make_map(const Options& o, MapHandle& h) {
    if (o.map_family == "ct") {
        check(clv_map_create_ct(o.K, geometry_of(o), &h.m));
    } else if (o.map_family == "mcmillan-custom") {
        check(clv_map_create_mcmillan_coeffs(o.linear, o.sine, o.cosine, o.quadratic,
                                             geometry_of(o), &h.m));
    } else if (o.map_family == "generic") {
        check(clv_map_create_henon(o.henon_a, o.henon_b, &h.m));
    } else {
        throw UsageError("map.family must be ct, mcmillan-custom, or generic");
    }
}

std::uint64_t transient_value(const Options& o) {
    if (o.transient == "auto") return UINT64_MAX;
    return parse_u64(o.transient);
}

clv_engine engine_of(const Options& o) {
    if (o.engine == "scalar") return CLV_ENGINE_SCALAR;
    if (o.engine == "general") return CLV_ENGINE_GENERAL;
    throw UsageError("engine must be scalar or general");
}

double fprime_max_estimate(const clv_map* m) {
    double best = 0.0;
    for (int i = 0; i < 10000; ++i) {
        clv_jacobian j;
        check(clv_map_jacobian(m, kTwoPi * i / 10000.0, 0.0, &j));
        best = std::max(best, std::fabs(j.a));
    }
    return best;
}

// ---------------------------------------------------------------- commands

int run_fixedpoints(const Options& o) {
    MapHandle h;
    make_map(o, h);
    std::vector<clv_fixed_point> fps(64);
    std::size_t count = 0;
    check(clv_map_fixed_points(h.m, o.resolution, fps.data(), fps.size(), &count));
    if (count > fps.size()) {
        fps.resize(count);
        check(clv_map_fixed_points(h.m, o.resolution, fps.data(), fps.size(), &count));
    }

    Csv csv(o.out + ".csv", o.digits);
    csv.header(
        "x,y,trace,class,chi_plus_re,chi_plus_im,chi_minus_re,chi_minus_im,lyapunov,slope_plus,"
        "slope_minus");
    const char* names[] = {"hyperbolic", "elliptic", "parabolic"};
    for (std::size_t i = 0; i < count; ++i) {
        const auto& r = fps[i];
        csv.real(r.x);
        csv.real(r.y);
        csv.real(r.trace);
        csv.text(names[r.cls]);
        csv.real(r.chi_plus_re);
        csv.real(r.chi_plus_im);
        csv.real(r.chi_minus_re);
        csv.real(r.chi_minus_im);
        csv.real(r.lyapunov);
        csv.real(r.slope_plus);
        csv.real(r.slope_minus, true);
    }
    csv.close();

    json res;
    res["fixed_points"] = count;
    write_sidecar(o, "fixedpoints", res);
    return 0;
}

int run_orbit(const Options& o) {
    MapHandle h;
    make_map(o, h);
    clv_tangent* t = nullptr;
    check(clv_tangent_create_seeded(h.m, engine_of(o), o.x0, o.y0, o.seed, &t));
    std::unique_ptr<clv_tangent, decltype(&clv_tangent_free)> guard(t, clv_tangent_free);

    Csv csv(o.out + ".csv", o.digits);
    csv.header("step,x,y,psi,sigma,eta,lambda1,log_kappa,singular");
    struct SinkCtx {
        Csv* csv;
        std::uint64_t stride;
    } ctx{&csv, std::max<std::uint64_t>(1, o.stride)};
    auto sink = [](const clv_step_record* r, void* user) {
        auto* c = static_cast<SinkCtx*>(user);
        if (r->step % c->stride != 0) return 0;
        c->csv->integer(r->step);
        c->csv->real(r->x);
        c->csv->real(r->y);
        c->csv->real(r->psi);
        c->csv->signed_integer(r->sigma);
        c->csv->real(r->eta);
        c->csv->real(r->lambda1);
        c->csv->real(r->log_kappa);
        c->csv->integer(static_cast<std::uint64_t>(r->singular), true);
        return 0;
    };
    check(clv_tangent_run(t, o.steps, sink, &ctx));
    csv.close();

    clv_tangent_state st;
    check(clv_tangent_state_get(t, &st));
    json res;
    res["steps"] = o.steps;
    res["ftle"] = st.ftle_steps ? st.ftle_sum_log / double(st.ftle_steps) : 0.0;
    res["ftle_steps"] = st.ftle_steps;
    res["singular_events"] = st.singular_events;
    res["final"] = {{"x", st.x}, {"y", st.y}, {"psi", st.psi}, {"eta", st.eta},
                    {"sigma", st.sigma}};
    write_sidecar(o, "orbit", res);
    return 0;
}

template <class PerRecord>
clv_observable_summary stream_observables(const Options& o, const MapHandle& h, PerRecord&& fn) {
    clv_observable_options opt{};
    opt.steps = o.steps;
    opt.transient = transient_value(o);
    opt.window = o.window;
    opt.overlap = o.overlap;
    opt.seed = o.seed;
    struct Ctx {
        PerRecord* fn;
    } ctx{&fn};
    auto sink = [](const clv_observable_record* r, void* user) {
        (*static_cast<Ctx*>(user)->fn)(*r);
        return 0;
    };
    clv_observable_summary sum{};
    check(clv_observables_run(h.m, o.x0, o.y0, &opt, sink, &ctx, &sum));
    return sum;
}

json summary_json(const clv_observable_summary& s) {
    json j;
    j["emitted"] = s.emitted;
    j["transient"] = s.transient_used;
    j["singular_plus"] = s.singular_plus;
    j["singular_minus"] = s.singular_minus;
    j["tangencies"] = s.tangencies;
    j["ftle"] = s.ftle_steps ? s.ftle_sum_log / double(s.ftle_steps) : 0.0;
    j["ftle_singular"] = s.ftle_singular;
    return j;
}

struct FieldHandle {
    clv_field* f = nullptr;
    ~FieldHandle() { clv_field_free(f); }
};
struct Hist1Handle {
    clv_hist1* h = nullptr;
    ~Hist1Handle() { clv_hist1_free(h); }
};
struct Hist2Handle {
    clv_hist2* h = nullptr;
    ~Hist2Handle() { clv_hist2_free(h); }
};

void write_field_csv(const std::string& path, int digits, const clv_field* f) {
    Csv csv(path, digits);
    csv.header("i,j,mean,count");
    const std::uint32_t nx = clv_field_nx(f), ny = clv_field_ny(f);
    for (std::uint32_t i = 0; i < nx; ++i) {
        for (std::uint32_t j = 0; j < ny; ++j) {
            const std::uint64_t c = clv_field_count(f, i, j);
            if (c == 0) continue;
            csv.integer(i);
            csv.integer(j);
            csv.real(clv_field_mean(f, i, j));
            csv.integer(c, true);
        }
    }
    csv.close();
}

void write_hist1_csv(const std::string& path, int digits, const clv_hist1* h) {
    Csv csv(path, digits);
    csv.header("bin_left,bin_right,count");
    for (std::uint32_t i = 0; i < clv_hist1_bins(h); ++i) {
        csv.real(clv_hist1_bin_left(h, i));
        csv.real(clv_hist1_bin_right(h, i));
        csv.integer(clv_hist1_count(h, i), true);
    }
    csv.close();
}

json hist1_json(const clv_hist1* h) {
    json j;
    j["total"] = clv_hist1_total(h);
    j["underflow"] = clv_hist1_underflow(h);
    j["overflow"] = clv_hist1_overflow(h);
    j["non_finite"] = clv_hist1_non_finite(h);
    return j;
}

int run_field(const Options& o) {
    if (geometry_of(o) != CLV_GEOM_TORUS) throw UsageError("field requires torus geometry");
    MapHandle h;
    make_map(o, h);
    const std::uint32_t grid = o.grid ? o.grid : 1000;

    FieldHandle lam, kap, th;
    check(clv_field_create_torus(grid, grid, &lam.f));
    check(clv_field_create_torus(grid, grid, &kap.f));
    check(clv_field_create_torus(grid, grid, &th.f));

    const clv_observable_summary sum =
        stream_observables(o, h, [&](const clv_observable_record& rec) {
            clv_field_add(lam.f, rec.x, rec.y, rec.lambda1);
            clv_field_add(kap.f, rec.x, rec.y, rec.log_kappa);
            clv_field_add(th.f, rec.x, rec.y, rec.theta);
        });

    write_field_csv(o.out + "_lambda1.csv", o.digits, lam.f);
    write_field_csv(o.out + "_log_kappa.csv", o.digits, kap.f);
    write_field_csv(o.out + "_theta.csv", o.digits, th.f);

    json res = summary_json(sum);
    res["grid"] = grid;
    write_sidecar(o, "field", res);
    return 0;
}

int run_joint(const Options& o) {
    MapHandle h;
    make_map(o, h);
    Hist2Handle lk, tk, lt;
    check(clv_hist2_create(-15.0, 15.0, o.bins, -20.0, 20.0, o.bins, &lk.h));
    check(clv_hist2_create(-kPi / 2, kPi / 2, o.bins, -20.0, 20.0, o.bins, &tk.h));
    check(clv_hist2_create(-15.0, 15.0, o.bins, -kPi / 2, kPi / 2, o.bins, &lt.h));

    const clv_observable_summary sum =
        stream_observables(o, h, [&](const clv_observable_record& rec) {
            clv_hist2_add(lk.h, rec.lambda1, rec.log_kappa);
            clv_hist2_add(tk.h, rec.theta, rec.log_kappa);
            clv_hist2_add(lt.h, rec.lambda1, rec.theta);
        });

    auto write2 = [&](const std::string& path, const clv_hist2* h2) {
        Csv csv(path, o.digits);
        csv.header("i,j,count");
        for (std::uint32_t i = 0; i < clv_hist2_x_bins(h2); ++i)
            for (std::uint32_t j = 0; j < clv_hist2_y_bins(h2); ++j) {
                const std::uint64_t c = clv_hist2_count(h2, i, j);
                if (c == 0) continue;
                csv.integer(i);
                csv.integer(j);
                csv.integer(c, true);
            }
        csv.close();
    };
    write2(o.out + "_lambda1_log_kappa.csv", lk.h);
    write2(o.out + "_theta_log_kappa.csv", tk.h);
    write2(o.out + "_lambda1_theta.csv", lt.h);

    json res = summary_json(sum);
    res["bins"] = o.bins;
    res["ranges"] = {{"lambda1", {-15.0, 15.0}},
                     {"log_kappa", {-20.0, 20.0}},
                     {"theta", {-kPi / 2, kPi / 2}}};
    auto oob = [](const clv_hist2* h2) {
        return json{{"out_of_range", clv_hist2_out_of_range(h2)},
                    {"non_finite", clv_hist2_non_finite(h2)}};
    };
    res["lambda1_log_kappa"] = oob(lk.h);
    res["theta_log_kappa"] = oob(tk.h);
    res["lambda1_theta"] = oob(lt.h);
    write_sidecar(o, "joint", res);
    return 0;
}

int run_split(const Options& o) {
    if (geometry_of(o) != CLV_GEOM_TORUS) throw UsageError("split requires torus geometry");
    MapHandle h;
    make_map(o, h);
    const std::uint32_t grid = o.grid ? o.grid : 100;

    Hist1Handle direct;
    check(clv_hist1_create(-kPi / 2, kPi / 2, o.bins, &direct.h));
    FieldHandle psi_plus;
    check(clv_field_create_torus(grid, grid, &psi_plus.f));

    const clv_observable_summary sum =
        stream_observables(o, h, [&](const clv_observable_record& rec) {
            clv_hist1_add(direct.h, rec.theta);
            clv_field_add(psi_plus.f, rec.x, rec.y, rec.psi_plus);
        });

    std::vector<double> theta(std::size_t(grid) * grid);
    std::vector<std::uint8_t> status(theta.size());
    check(clv_grid_theta(psi_plus.f, theta.data(), status.data(), theta.size()));

    Hist1Handle gridded;
    check(clv_hist1_create(-kPi / 2, kPi / 2, o.bins, &gridded.h));
    for (std::uint32_t i = 0; i < grid; ++i)
        for (std::uint32_t j = 0; j < grid; ++j) {
            const std::size_t k = std::size_t(i) * grid + j;
            if (status[k] == 1) continue;  // empty
            const std::uint64_t w = clv_field_count(psi_plus.f, i, j);
            for (std::uint64_t q = 0; q < w; ++q) clv_hist1_add(gridded.h, theta[k]);
        }

    write_hist1_csv(o.out + "_theta_hist.csv", o.digits, direct.h);
    write_hist1_csv(o.out + "_theta_grid_hist.csv", o.digits, gridded.h);
    write_field_csv(o.out + "_psi_plus_field.csv", o.digits, psi_plus.f);

    Csv gcsv(o.out + "_theta_grid.csv", o.digits);
    gcsv.header("i,j,theta,status");
    for (std::uint32_t i = 0; i < grid; ++i)
        for (std::uint32_t j = 0; j < grid; ++j) {
            const std::size_t k = std::size_t(i) * grid + j;
            if (status[k] == 1) continue;
            gcsv.integer(i);
            gcsv.integer(j);
            gcsv.real(theta[k]);
            gcsv.integer(status[k], true);
        }
    gcsv.close();

    double l1 = 0.0;
    check(clv_hist1_l1_distance(direct.h, gridded.h, &l1));

    json res = summary_json(sum);
    res["grid"] = grid;
    res["bins"] = o.bins;
    res["theta_direct"] = hist1_json(direct.h);
    res["theta_grid"] = hist1_json(gridded.h);
    res["l1_direct_vs_grid"] = l1;
    std::uint64_t tangency_cells = 0, empty_cells = 0;
    for (const std::uint8_t s : status) {
        if (s == 1) ++empty_cells;
        if (s == 2) ++tangency_cells;
    }
    res["empty_cells"] = empty_cells;
    res["tangency_cells"] = tangency_cells;
    write_sidecar(o, "split", res);
    return 0;
}

int run_converge(const Options& o) {
    MapHandle h;
    make_map(o, h);
    if (o.quantity != "eta" && o.quantity != "psi")
        throw UsageError("quantity must be psi or eta");
    const clv_quantity q = o.quantity == "eta" ? CLV_QUANTITY_ETA : CLV_QUANTITY_PSI;

    // sample every step for short runs, log-spaced beyond
    std::vector<std::uint64_t> times;
    if (o.steps <= 4096) {
        for (std::uint64_t t = 0; t <= o.steps; ++t) times.push_back(t);
    } else {
        for (std::uint64_t t = 0; t <= 16; ++t) times.push_back(t);
        const double lo = std::log(16.0), hi = std::log(double(o.steps));
        for (int i = 1; i <= 480; ++i) {
            const auto t = static_cast<std::uint64_t>(std::exp(lo + (hi - lo) * i / 480.0));
            if (t > times.back() && t <= o.steps) times.push_back(t);
        }
        if (times.back() != o.steps) times.push_back(o.steps);
    }

    std::vector<double> spread(times.size());
    std::uint64_t singular = 0;
    check(clv_ensemble_decay(h.m, o.x0, o.y0, q, o.ensemble, o.steps, times.data(), times.size(),
                             o.seed, o.workers, spread.data(), &singular));

    Csv csv(o.out + ".csv", o.digits);
    csv.header("t,spread");
    for (std::size_t i = 0; i < times.size(); ++i) {
        csv.integer(times[i]);
        csv.real(spread[i], true);
    }
    csv.close();

    clv_fit_model model;
    if (o.fit == "exp")
        model = CLV_FIT_EXPONENTIAL;
    else if (o.fit == "power")
        model = CLV_FIT_POWER_LAW;
    else if (o.fit == "auto")
        model = CLV_FIT_AUTO;
    else
        throw UsageError("fit must be exp, power, or auto");

    std::vector<double> tdbl(times.begin(), times.end());
    clv_decay_fit fit{};
    const bool fitted =
        clv_decay_fit_windowed(tdbl.data(), spread.data(), spread.size(), model, &fit) == CLV_OK;
    const std::string fit_error = fitted ? "" : clv_last_error();

    // reference orbit exponent for context
    clv_tangent* t = nullptr;
    check(clv_tangent_create_seeded(h.m, CLV_ENGINE_SCALAR, o.x0, o.y0, o.seed, &t));
    std::unique_ptr<clv_tangent, decltype(&clv_tangent_free)> guard(t, clv_tangent_free);
    check(clv_tangent_run(t, 200000, nullptr, nullptr));
    clv_tangent_state st;
    check(clv_tangent_state_get(t, &st));
    const double lambda = st.ftle_steps ? st.ftle_sum_log / double(st.ftle_steps) : 0.0;

    json res;
    res["members"] = o.ensemble;
    res["quantity"] = o.quantity;
    res["warmup"] = o.warmup;
    res["singular_events"] = singular;
    res["orbit_ftle_200k"] = lambda;
    if (fitted) {
        res["fit"] = {{"model", fit.model == CLV_FIT_POWER_LAW ? "power" : "exp"},
                      {"rate", fit.rate},
                      {"residual", fit.residual},
                      {"window_first", fit.window_first},
                      {"window_last", fit.window_last}};
        if (fit.model == CLV_FIT_EXPONENTIAL && lambda > 0.0)
            res["fit_rate_over_lambda"] = fit.rate / lambda;
    } else {
        res["fit"] = {{"error", fit_error}};
    }
    write_sidecar(o, "converge", res);
    return 0;
}

int run_approx(const Options& o) {
    MapHandle h;
    make_map(o, h);
    if (o.order > 16) throw UsageError("order must be <= 16");
    const std::uint32_t norders = o.order + 1;

    Hist1Handle exact_theta, approx_theta;
    check(clv_hist1_create(-kPi / 2, kPi / 2, o.bins, &exact_theta.h));
    check(clv_hist1_create(-kPi / 2, kPi / 2, o.bins, &approx_theta.h));

    std::vector<std::vector<double>> errs(norders);
    std::uint64_t truncation_singular = 0;

    Csv csv(o.out + ".csv", o.digits);
    {
        std::string hd = "step,x,y,psi_exact";
        for (std::uint32_t n = 0; n < norders; ++n) hd += ",psi_" + std::to_string(n);
        for (std::uint32_t n = 0; n < norders; ++n) hd += ",err_" + std::to_string(n);
        csv.header(hd.c_str());
    }

    const std::uint64_t stride = std::max<std::uint64_t>(1, o.stride);
    std::vector<double> approx(norders);
    const clv_observable_summary sum =
        stream_observables(o, h, [&](const clv_observable_record& rec) {
            for (std::uint32_t n = 0; n < norders; ++n) {
                int sing = 0;
                check(clv_cf_slope(h.m, rec.x, rec.y, n, &approx[n], &sing));
                if (sing) ++truncation_singular;
                errs[n].push_back(std::fabs(approx[n] - rec.psi_plus));
            }
            // splitting angle from the highest-order approximant and its
            // reflection partner 1 / psi_N(y, x)
            double mirrored;
            int sing = 0;
            check(clv_cf_slope(h.m, rec.y, rec.x, o.order, &mirrored, &sing));
            if (sing) ++truncation_singular;
            clv_hist1_add(exact_theta.h, rec.theta);
            clv_hist1_add(approx_theta.h,
                          clv_splitting_angle(approx[o.order], 1.0 / mirrored));

            if (rec.step % stride == 0) {
                csv.integer(rec.step);
                csv.real(rec.x);
                csv.real(rec.y);
                csv.real(rec.psi_plus);
                for (std::uint32_t n = 0; n < norders; ++n) csv.real(approx[n]);
                for (std::uint32_t n = 0; n < norders; ++n)
                    csv.real(std::fabs(approx[n] - rec.psi_plus), n + 1 == norders);
            }
        });
    csv.close();

    write_hist1_csv(o.out + "_theta_exact_hist.csv", o.digits, exact_theta.h);
    write_hist1_csv(o.out + "_theta_approx_hist.csv", o.digits, approx_theta.h);

    double l1 = 0.0;
    check(clv_hist1_l1_distance(exact_theta.h, approx_theta.h, &l1));

    json res = summary_json(sum);
    res["order"] = o.order;
    res["truncation_singular"] = truncation_singular;
    res["theta_l1_exact_vs_approx"] = l1;
    json medians = json::array();
    for (std::uint32_t n = 0; n < norders; ++n) {
        auto& v = errs[n];
        if (v.empty()) {
            medians.push_back(0.0);
            continue;
        }
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        medians.push_back(v[v.size() / 2]);
    }
    res["median_abs_error"] = medians;
    const double lambda = sum.ftle_steps ? sum.ftle_sum_log / double(sum.ftle_steps) : 0.0;
    if (lambda > 0.0)
        res["series_weight_bound"] =
            clv_series_weight_bound(lambda, o.order, fprime_max_estimate(h.m));
    write_sidecar(o, "approx", res);
    return 0;
}

int run_verify(const Options& o) {
    MapHandle h;
    make_map(o, h);
    struct VerifyCheck {
        std::string name;
        double measured;
        double tolerance;
        bool pass;
    };
    std::vector<VerifyCheck> checks;

    // 1. full FTLE identity against the vector-iteration exponent
    {
        const double alpha0 = 0.7;
        const double psi0 = 1.0 / std::tan(alpha0);
        clv_tangent* t = nullptr;
        check(clv_tangent_create(h.m, CLV_ENGINE_SCALAR, o.x0, o.y0, psi0, 1, 0.0, &t));
        std::unique_ptr<clv_tangent, decltype(&clv_tangent_free)> guard(t, clv_tangent_free);
        check(clv_tangent_run(t, 1000, nullptr, nullptr));
        clv_tangent_state st;
        check(clv_tangent_state_get(t, &st));
        const double reduced = st.ftle_sum_log / double(st.ftle_steps);
        const double alpha_k = clv_direction_angle(st.psi);
        const double full =
            reduced - std::log(std::fabs(std::sin(alpha_k) / std::sin(alpha0))) / 1000.0;
        double benettin = 0.0;
        check(clv_benettin_ftle(h.m, o.x0, o.y0, 1000, std::cos(alpha0), std::sin(alpha0),
                                &benettin));
        const double rel = std::fabs(full - benettin) / std::max(1.0, std::fabs(benettin));
        checks.push_back({"ftle_identity", rel, 1e-10, rel < 1e-10});
    }

    // 2. covariant directions against the matched-slope stream
    {
        std::vector<clv_observable_record> recs;
        clv_observable_options opt{};
        opt.steps = 310;
        opt.transient = 300;
        opt.window = o.window;
        opt.overlap = o.overlap;
        opt.seed = o.seed;
        auto sink = [](const clv_observable_record* r, void* user) {
            static_cast<std::vector<clv_observable_record>*>(user)->push_back(*r);
            return 0;
        };
        check(clv_observables_run(h.m, o.x0, o.y0, &opt, sink, &recs, nullptr));
        double worst = 0.0;
        for (const auto& rec : recs) {
            double pp, pm;
            check(clv_clv_directions(h.m, rec.x, rec.y, 200, &pp, &pm));
            worst =
                std::max(worst, std::fabs(pp - rec.psi_plus) / std::max(1.0, std::fabs(pp)));
            worst =
                std::max(worst, std::fabs(pm - rec.psi_minus) / std::max(1.0, std::fabs(pm)));
        }
        checks.push_back({"clv_directions", worst, 1e-8, worst < 1e-8});
    }

    // 3. curvature formula against circumcircle finite differences
    {
        const double chi = 2.0 + std::sqrt(3.0);
        const double eta_star = 1.0 / (1.0 - 1.0 / (chi * chi * chi));
        double xs[3], ys[3];
        for (int i = 0; i < 3; ++i) {
            const double y = 1e-4 * (i - 1);
            ys[i] = y;
            xs[i] = chi * y + 0.5 * eta_star * y * y;
        }
        double fd = 0.0;
        check(clv_fd_curvature(xs, ys, 3, &fd));
        const double kappa = clv_curvature(chi, eta_star);
        const double rel = std::fabs(fd - kappa) / kappa;
        checks.push_back({"fd_curvature", rel, 1e-2, rel < 1e-2});
    }

    // 4. scalar vs general engine on this map (McMillan families only)
    if (clv_map_is_mcmillan(h.m)) {
        clv_tangent *ts = nullptr, *tg = nullptr;
        check(clv_tangent_create_seeded(h.m, CLV_ENGINE_SCALAR, o.x0, o.y0, o.seed, &ts));
        check(clv_tangent_create_seeded(h.m, CLV_ENGINE_GENERAL, o.x0, o.y0, o.seed, &tg));
        struct Collect {
            std::vector<double> psi, eta;
        } cs, cg;
        auto sink = [](const clv_step_record* r, void* user) {
            auto* c = static_cast<Collect*>(user);
            c->psi.push_back(r->psi);
            c->eta.push_back(r->eta);
            return 0;
        };
        check(clv_tangent_run(ts, 10000, sink, &cs));
        check(clv_tangent_run(tg, 10000, sink, &cg));
        double worst = 0.0;
        for (std::size_t i = 0; i < cs.psi.size(); ++i) {
            worst = std::max(
                worst, std::fabs(cs.psi[i] - cg.psi[i]) / std::max(1.0, std::fabs(cs.psi[i])));
            worst = std::max(
                worst, std::fabs(cs.eta[i] - cg.eta[i]) / std::max(1.0, std::fabs(cs.eta[i])));
        }
        clv_tangent_free(ts);
        clv_tangent_free(tg);
        checks.push_back({"engine_equivalence", worst, 1e-12, worst < 1e-12});
    }

    Csv csv(o.out + ".csv", o.digits);
    csv.header("check,measured,tolerance,pass");
    bool all = true;
    for (const auto& c : checks) {
        std::printf("[%s] %s (measured %.3g, tolerance %.3g)\n", c.pass ? "PASS" : "FAIL",
                    c.name.c_str(), c.measured, c.tolerance);
        csv.text(c.name.c_str());
        csv.real(c.measured);
        csv.real(c.tolerance);
        csv.integer(c.pass ? 1 : 0, true);
        all = all && c.pass;
    }
    csv.close();

    json res;
    for (const auto& c : checks)
        res[c.name] = {{"measured", c.measured}, {"tolerance", c.tolerance}, {"pass", c.pass}};
    res["all_pass"] = all;
    write_sidecar(o, "verify", res);
    if (!all) throw NumericError("verification checks failed");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clvmap: covariant-vector slopes, curvatures, exponents and splitting angles "
                 "of standard-like planar maps"};
    app.require_subcommand(1);

    Options o;
    auto add_common = [&](CLI::App* c) {
        c->add_option("--map", o.map_family, "map family: ct | mcmillan-custom | generic");
        c->add_option("--K", o.K, "CT map parameter K");
        c->add_option("--geometry", o.geometry, "torus | plane");
        c->add_option("--map-a", o.henon_a, "generic (Henon) parameter a");
        c->add_option("--map-b", o.henon_b, "generic (Henon) parameter b");
        c->add_option("--linear", o.linear, "mcmillan-custom linear coefficient");
        c->add_option("--sine", o.sine, "mcmillan-custom sine coefficient");
        c->add_option("--cosine", o.cosine, "mcmillan-custom cosine coefficient");
        c->add_option("--quadratic", o.quadratic, "mcmillan-custom quadratic coefficient");
        c->add_option("--x0", o.x0, "initial x");
        c->add_option("--y0", o.y0, "initial y");
        c->add_option("--steps", o.steps, "orbit length");
        c->add_option("--seed", o.seed, "RNG seed");
        c->add_option("--engine", o.engine, "tangent engine: scalar | general");
        c->add_option("--grid", o.grid, "phase-space grid cells per side");
        c->add_option("--bins", o.bins, "histogram bins");
        c->add_option("--ensemble", o.ensemble, "ensemble members");
        c->add_option("--order", o.order, "approximation order");
        c->add_option("--transient", o.transient, "transient steps or 'auto'");
        c->add_option("--workers", o.workers, "worker threads for ensembles");
        c->add_option("--out", o.out, "output path prefix");
        c->add_option("--digits", o.digits, "CSV significant digits")->check(CLI::Range(1, 17));
        c->add_option("--stride", o.stride, "record every n-th step");
        c->add_option("--quantity", o.quantity, "ensemble quantity: psi | eta");
        c->add_option("--fit", o.fit, "decay fit model: exp | power | auto");
        c->add_option("--window", o.window, "backward-sweep window length");
        c->add_option("--overlap", o.overlap, "backward-sweep overlap");
        c->add_option("--resolution", o.resolution, "fixed-point scan resolution");
        c->add_option("--warmup", o.warmup, "ensemble warmup steps");
        c->add_option("--config", o.config_path, "flat key=value config file");
    };

    add_common(app.add_subcommand("orbit", "tangent-state records and the FTLE along one orbit"));
    add_common(app.add_subcommand("field", "phase-space mean fields of lambda1, ln kappa, theta"));
    add_common(app.add_subcommand("joint", "joint 2D histograms of (lambda1, ln kappa, theta)"));
    add_common(
        app.add_subcommand("split", "splitting angles: direct sweep and grid transposition"));
    add_common(app.add_subcommand("converge", "ensemble spread decay along a fixed orbit"));
    add_common(app.add_subcommand("approx", "continued-fraction slope approximants"));
    add_common(app.add_subcommand("fixedpoints", "fixed points and their stability"));
    add_common(app.add_subcommand("verify", "oracle cross-checks"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* active = app.get_subcommands().front();
    const std::string command = active->get_name();

    try {
        if (!o.config_path.empty()) {
            // flags given explicitly keep priority over the file
            static const std::map<std::string, std::string> flag_for_key = {
                {"map.family", "--map"},
                {"map.K", "--K"},
                {"map.geometry", "--geometry"},
                {"map.a", "--map-a"},
                {"map.b", "--map-b"},
                {"map.linear", "--linear"},
                {"map.sine", "--sine"},
                {"map.cosine", "--cosine"},
                {"map.quadratic", "--quadratic"},
                {"x0", "--x0"},
                {"y0", "--y0"},
                {"steps", "--steps"},
                {"seed", "--seed"},
                {"engine", "--engine"},
                {"grid", "--grid"},
                {"bins", "--bins"},
                {"ensemble", "--ensemble"},
                {"order", "--order"},
                {"transient", "--transient"},
                {"workers", "--workers"},
                {"out", "--out"},
                {"digits", "--digits"},
                {"stride", "--stride"},
                {"quantity", "--quantity"},
                {"fit", "--fit"},
                {"window", "--window"},
                {"overlap", "--overlap"},
                {"resolution", "--resolution"},
                {"warmup", "--warmup"},
            };
            std::vector<std::string> pinned;
            for (const auto& [key, flag] : flag_for_key)
                if (active->count(flag) > 0) pinned.push_back(key);
            apply_config_file(o, o.config_path, pinned);
        }
        if (o.out.empty()) o.out = command;
        if (o.workers == 0) throw UsageError("workers must be >= 1");

        if (command == "orbit") return run_orbit(o);
        if (command == "field") return run_field(o);
        if (command == "joint") return run_joint(o);
        if (command == "split") return run_split(o);
        if (command == "converge") return run_converge(o);
        if (command == "approx") return run_approx(o);
        if (command == "fixedpoints") return run_fixedpoints(o);
        if (command == "verify") return run_verify(o);
        throw UsageError("unknown subcommand");
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
