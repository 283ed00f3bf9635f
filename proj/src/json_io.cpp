#include "lps/json_io.hpp"

#include "lps/parallel.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace lps {

int max_threads() {
    static const int cap = [] {
        if (const char* env = std::getenv("LPS_LAB_THREADS")) {
            const int v = std::atoi(env);
            if (v >= 1) return v;
        }
        const unsigned hc = std::thread::hardware_concurrency();
        return hc ? static_cast<int>(hc) : 1;
    }();
    return cap;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(max_threads(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
T field_as(const Json& j, const std::string& key, const char* type_name) {
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ValidationError("config: field '" + key + "' missing or not " + type_name);
    }
}

Vec optional_vec(const Json& j, const std::string& key, int n, double fill) {
    if (!j.contains(key)) return Vec::Constant(n, fill);
    const auto arr = field_as<std::vector<double>>(j, key, "an array of numbers");
    if (static_cast<int>(arr.size()) != n)
        throw ValidationError("config: field '" + key + "' must have " + std::to_string(n) +
                              " entries");
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = arr[i];
    return v;
}

} // namespace

Model model_from_json(const Json& j) {
    if (j.contains("grid")) {
        const Json& g = j.at("grid");
        GridSpec spec;
        spec.dims = field_as<std::vector<int>>(g, "dims", "an array of integers");
        if (g.contains("coeff")) {
            if (g.at("coeff").is_number()) {
                spec.coeff_const = g.at("coeff").get<double>();
            } else {
                const auto arr = field_as<std::vector<double>>(g, "coeff", "a number or array");
                spec.coeff = Vec(arr.size());
                for (std::size_t i = 0; i < arr.size(); ++i) spec.coeff[i] = arr[i];
            }
        }
        if (g.contains("h")) spec.h = field_as<double>(g, "h", "a number");
        if (g.contains("bc")) {
            const auto bc = field_as<std::string>(g, "bc", "a string");
            if (bc == "dirichlet")
                spec.dirichlet = true;
            else if (bc == "neumann")
                spec.dirichlet = false;
            else
                throw ValidationError("config: field 'bc' must be 'dirichlet' or 'neumann'");
        }
        Model m = grid_model(spec);
        if (j.contains("name")) m.name = j.at("name").get<std::string>();
        if (j.contains("potential"))
            m.potential = optional_vec(j, "potential", m.n, 0.0);
        m.validate();
        return m;
    }

    Model m;
    m.n = field_as<int>(j, "n", "an integer");
    if (m.n <= 0) throw ValidationError("config: field 'n' must be positive");
    m.mu = optional_vec(j, "mu", m.n, 1.0);
    m.potential = optional_vec(j, "potential", m.n, 0.0);
    if (j.contains("edges")) {
        for (const Json& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 3)
                throw ValidationError("config: field 'edges' entries must be [u, v, w]");
            m.edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
        }
    }
    if (j.contains("dirichlet"))
        m.dirichlet = field_as<std::vector<int>>(j, "dirichlet", "an array of integers");
    if (j.contains("name")) m.name = j.at("name").get<std::string>();
    m.validate();
    return m;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Model load_model_file(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        throw ValidationError("model file '" + path + "': " + e.what());
    }
    Model m = model_from_json(j);
    if (m.name.empty()) m.name = path;
    return m;
}

Json to_json(const Vec& v) {
    Json a = Json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vec vec_from_json(const Json& j) {
    if (!j.is_array()) throw ValidationError("expected a JSON array of numbers");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
    return v;
}

Json to_json(const SubmarkovReport& r) {
    return Json{{"mu_self_adjoint", r.mu_self_adjoint},
                {"offdiag_nonpositive", r.offdiag_nonpositive},
                {"rowsum_nonnegative", r.rowsum_nonnegative},
                {"psd", r.psd},
                {"pass", r.pass()},
                {"worst_self_adjoint", r.worst_self_adjoint},
                {"worst_offdiag", r.worst_offdiag},
                {"worst_rowsum", r.worst_rowsum},
                {"min_eigenvalue", r.min_eigenvalue},
                {"max_eigenvalue", r.max_eigenvalue}};
}

Json to_json(const LpsResult& r) {
    Json norms = Json::object();
    for (const auto& [p, v] : r.p_norms) {
        std::ostringstream key;
        key << p;
        norms[key.str()] = v;
    }
    return Json{{"values", to_json(r.values)},
                {"p_norms", norms},
                {"quadrature_error_estimate", r.quadrature_error_estimate},
                {"warning", r.warning}};
}

Json to_json(const InequalityReport& r) {
    return Json{{"model", r.model_id},
                {"p", r.p},
                {"p0", r.p0},
                {"p1", r.p1},
                {"eps", r.eps},
                {"max_ratio", r.max_ratio},
                {"corpus_mean", r.corpus_mean},
                {"corpus_median", r.corpus_median},
                {"corpus_max", r.corpus_max},
                {"corpus_admissible", r.corpus_admissible},
                {"no_admissible_corpus", r.no_admissible_corpus},
                {"search_iterations", r.search_iterations},
                {"search_improvements", r.search_improvements},
                {"search_converged", r.search_converged},
                {"seed", r.seed},
                {"witness", to_json(r.witness)}};
}

Json to_json(const RboundEstimate& r) {
    Json fs = Json::array();
    for (const Vec& f : r.fs) fs.push_back(to_json(f));
    return Json{{"value", r.value},
                {"m", r.m},
                {"p", r.p},
                {"mode", r.mode == RademacherMode::Exact ? "exact-enumeration" : "monte-carlo"},
                {"seed", r.seed},
                {"ts", r.ts},
                {"fs", fs},
                {"restart_best", r.restart_best}};
}

Json to_json(const FamilyComparison& r) {
    return Json{{"semigroup", to_json(r.semigroup)},
                {"resolvent", to_json(r.resolvent)},
                {"ratio", r.ratio},
                {"semigroup_trending", r.semigroup_trending},
                {"resolvent_trending", r.resolvent_trending}};
}

Json to_json(const ChainReport& r) {
    Json checks = Json::array();
    for (const ChainCheck& c : r.checks)
        checks.push_back(Json{{"lhs", c.lhs}, {"rhs", c.rhs}, {"margin", c.margin}});
    return Json{{"p", r.p},
                {"alpha_p", r.alpha_p},
                {"worst_margin_rel", r.worst_margin_rel},
                {"pass", r.pass},
                {"checks", checks}};
}

Json to_json(const GradientBoundFit& r) {
    return Json{{"c_theta", r.c_theta},
                {"witness_t", r.witness_t},
                {"witness_vertex", r.witness_vertex},
                {"witness_corpus_index", r.witness_corpus_index},
                {"growing_in_t", r.growing_in_t}};
}

Json to_json(const OpNormEstimate& r) {
    return Json{{"value", r.value},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"seed", r.seed},
                {"witness", to_json(r.witness)}};
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp);
        out << content;
        if (!out.good()) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("rename failed: " + path);
}

} // namespace lps
