#include "cli.hpp"

#include "gplmbar/bar.hpp"
#include "gplmbar/baselines.hpp"
#include "gplmbar/bernstein.hpp"
#include "gplmbar/design.hpp"
#include "gplmbar/family.hpp"
#include "gplmbar/parallel.hpp"
#include "gplmbar/pipeline.hpp"
#include "gplmbar/random.hpp"
#include "gplmbar/simulate.hpp"
#include "gplmbar/table_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace gplmbar::cli {

using nlohmann::json;
namespace fs = std::filesystem;

json default_config() {
    return json::parse(R"({
        "seed": 1,
        "threads": 0,
        "output": "gplmbar-out",
        "family": "logistic",
        "data": {
            "path": null,
            "id": null,
            "response": "y",
            "penalized": "*",
            "categorical": [],
            "continuous": [],
            "degree": 3,
            "scenario": null,
            "n": 600,
            "p": 300,
            "replication": 0
        },
        "fit": {
            "method": "bar",
            "criterion": "bic",
            "lambda": null,
            "xi": 1.0,
            "folds": 10,
            "bootstrap": 0,
            "curve_points": 200
        },
        "simulate": {
            "scenario": "s1",
            "n": 800,
            "p": 300,
            "replications": 50,
            "methods": ["bar-bic"],
            "bias": false,
            "folds": 10,
            "curve_points": 200
        },
        "path": {
            "xi_grid": [0.1, 1.0, 10.0],
            "criteria": ["aic", "bic"]
        },
        "screen": {
            "genotypes": null,
            "phenotypes": null,
            "id": "id",
            "response": "y",
            "maf": 0.1,
            "p_value": 0.1
        },
        "bar": {
            "outer_tolerance": 1e-6,
            "max_outer_iterations": 100,
            "freeze_threshold": 1e-8
        },
        "ccd": {
            "max_passes": 500,
            "tolerance": 1e-8
        }
    })");
}

void merge_config(json& base, const json& patch, const std::string& where) {
    if (!patch.is_object()) throw ConfigError("config" + (where.empty() ? std::string() : " key " + where) + " must be an object");
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string key = where.empty() ? it.key() : where + "." + it.key();
        if (!base.contains(it.key())) {
            std::ostringstream msg;
            msg << "unknown config key '" << key << "' (valid:";
            for (auto b = base.begin(); b != base.end(); ++b) msg << ' ' << b.key();
            msg << ')';
            throw ConfigError(msg.str());
        }
        json& slot = base[it.key()];
        if (slot.is_object() && it.value().is_object()) {
            merge_config(slot, it.value(), key);
        } else {
            slot = it.value();
        }
    }
}

std::string manifest_hash(const std::string& command, const json& resolved) {
    std::uint64_t h = 14695981039346656037ULL;
    auto feed = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    feed(command);
    feed("\n");
    feed(resolved.dump());
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

namespace {

std::string pointer_name(const std::string& pointer) {
    std::string s = pointer.substr(1);
    std::replace(s.begin(), s.end(), '/', '.');
    return s;
}

// --- typed access to the resolved config -----------------------------------

const json& at(const json& cfg, const std::string& pointer) { return cfg.at(json::json_pointer(pointer)); }

double get_number(const json& cfg, const std::string& pointer) {
    const json& v = at(cfg, pointer);
    if (!v.is_number()) throw ConfigError("config key " + pointer_name(pointer) + ": expected a number");
    return v.get<double>();
}

std::optional<double> get_optional_number(const json& cfg, const std::string& pointer) {
    if (at(cfg, pointer).is_null()) return std::nullopt;
    return get_number(cfg, pointer);
}

long long get_integer(const json& cfg, const std::string& pointer) {
    const json& v = at(cfg, pointer);
    if (!v.is_number_integer()) throw ConfigError("config key " + pointer_name(pointer) + ": expected an integer");
    return v.get<long long>();
}

std::string get_string(const json& cfg, const std::string& pointer) {
    const json& v = at(cfg, pointer);
    if (!v.is_string()) throw ConfigError("config key " + pointer_name(pointer) + ": expected a string");
    return v.get<std::string>();
}

std::optional<std::string> get_optional_string(const json& cfg, const std::string& pointer) {
    if (at(cfg, pointer).is_null()) return std::nullopt;
    return get_string(cfg, pointer);
}

std::vector<std::string> get_strings(const json& cfg, const std::string& pointer) {
    const json& v = at(cfg, pointer);
    if (!v.is_array()) throw ConfigError("config key " + pointer_name(pointer) + ": expected a list of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw ConfigError("config key " + pointer_name(pointer) + ": expected a list of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::vector<double> get_numbers(const json& cfg, const std::string& pointer) {
    const json& v = at(cfg, pointer);
    if (!v.is_array()) throw ConfigError("config key " + pointer_name(pointer) + ": expected a list of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError("config key " + pointer_name(pointer) + ": expected a list of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

int positive_int(const json& cfg, const std::string& pointer, long long min = 1) {
    const long long v = get_integer(cfg, pointer);
    if (v < min || v > 1'000'000'000) {
        throw ConfigError("config key " + pointer_name(pointer) + ": must be at least " + std::to_string(min));
    }
    return static_cast<int>(v);
}

// --- command-line overrides --------------------------------------------------

enum class Kind { integer, real, text, text_list, real_list, flag };

struct Override {
    std::string pointer;
    Kind kind = Kind::text;
    std::string text;
    std::vector<std::string> list;
    bool flag = false;
    CLI::Option* option = nullptr;
};

class Overrides {
public:
    void add(CLI::App* app, const std::string& name, const std::string& pointer, Kind kind, const std::string& help) {
        Override& o = items_.emplace_back();
        o.pointer = pointer;
        o.kind = kind;
        switch (kind) {
            case Kind::flag: o.option = app->add_flag(name, o.flag, help); break;
            case Kind::text_list:
            case Kind::real_list: o.option = app->add_option(name, o.list, help)->delimiter(','); break;
            default: o.option = app->add_option(name, o.text, help); break;
        }
    }

    void apply(json& cfg) const {
        for (const auto& o : items_) {
            if (o.option->count() == 0) continue;
            const std::string flag = o.option->get_name();
            json value;
            try {
                switch (o.kind) {
                    case Kind::integer: {
                        std::size_t used = 0;
                        const long long v = std::stoll(o.text, &used);
                        if (used != o.text.size()) throw std::invalid_argument(o.text);
                        value = v;
                        break;
                    }
                    case Kind::real: {
                        std::size_t used = 0;
                        const double v = std::stod(o.text, &used);
                        if (used != o.text.size()) throw std::invalid_argument(o.text);
                        value = v;
                        break;
                    }
                    case Kind::text:
                        value = o.text;
                        break;
                    case Kind::text_list:
                        value = o.list;
                        break;
                    case Kind::real_list: {
                        value = json::array();
                        for (const auto& s : o.list) {
                            std::size_t used = 0;
                            const double v = std::stod(s, &used);
                            if (used != s.size()) throw std::invalid_argument(s);
                            value.push_back(v);
                        }
                        break;
                    }
                    case Kind::flag:
                        value = o.flag;
                        break;
                }
            } catch (const std::logic_error&) {
                throw ConfigError("option " + flag + ": cannot parse '" + o.text + "'");
            }
            cfg[json::json_pointer(o.pointer)] = value;
        }
    }

private:
    std::deque<Override> items_;
};

// --- data ingestion -----------------------------------------------------------

struct LoadedData {
    Dataset data;
    std::string source;
    int imputed = 0;
};

std::vector<std::string> coefficient_names(const Dataset& d, const BlockMap& map) {
    std::vector<std::string> names{"(intercept)"};
    for (const auto& w : d.w_names) names.push_back(w);
    for (std::size_t j = 0; j < d.z_specs.size(); ++j)
        for (int k = 1; k <= d.z_specs[j].degree; ++k) names.push_back(d.z_names[j] + ":b" + std::to_string(k));
    for (const auto& x : d.x_names) names.push_back(x);
    if (static_cast<Eigen::Index>(names.size()) != map.total()) throw std::logic_error("coefficient naming mismatch");
    return names;
}

void check_response(const Eigen::VectorXd& y, const Family& family, const std::function<std::string(Eigen::Index)>& where) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double v = y[i];
        if (std::isnan(v)) throw DataError(where(i) + ": response is missing");
        if (family.kind() == FamilyKind::logistic && v != 0.0 && v != 1.0) {
            throw DataError(where(i) + ": logistic response must be 0 or 1, got " + format_number(v));
        }
        if (family.kind() == FamilyKind::poisson && (v < 0.0 || v != std::floor(v))) {
            throw DataError(where(i) + ": Poisson response must be a non-negative integer, got " + format_number(v));
        }
    }
}

LoadedData load_scenario_data(json& cfg) {
    const std::string name = get_string(cfg, "/data/scenario");
    const int n = positive_int(cfg, "/data/n", 2);
    const int p = positive_int(cfg, "/data/p", 1);
    ScenarioConfig sc;
    try {
        sc = ScenarioConfig::preset(name, n, p);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    sc.seed = static_cast<std::uint64_t>(get_integer(cfg, "/seed"));
    sc.degree = positive_int(cfg, "/data/degree");
    // a generated dataset fixes its own family
    cfg["family"] = sc.family.name();
    LoadedData out;
    out.data = generate_scenario(sc, positive_int(cfg, "/data/replication", 0));
    out.source = "scenario " + name;
    return out;
}

LoadedData load_table_data(const json& cfg, const Family& family) {
    const fs::path path = get_string(cfg, "/data/path");
    const Table t = read_table(path);
    const std::string response = get_string(cfg, "/data/response");
    const auto id = get_optional_string(cfg, "/data/id");

    std::set<std::string> claimed;
    auto require = [&](const std::string& column, const std::string& role) {
        if (!t.find(column)) throw ConfigError(role + " column '" + column + "' is not in " + t.source);
        if (!claimed.insert(column).second) {
            throw ConfigError("column '" + column + "' is declared in more than one role");
        }
        return *t.find(column);
    };
    const std::size_t ycol = require(response, "response");
    if (id) require(*id, "id");

    std::vector<std::size_t> wcols;
    std::vector<std::string> wnames = get_strings(cfg, "/data/categorical");
    for (const auto& w : wnames) wcols.push_back(require(w, "categorical"));

    const int degree = positive_int(cfg, "/data/degree");
    std::vector<std::size_t> zcols;
    std::vector<std::string> znames;
    std::vector<std::optional<BasisSpec>> zspecs;
    const json& cont = at(cfg, "/data/continuous");
    if (!cont.is_array()) throw ConfigError("config key data.continuous: expected a list");
    for (const auto& c : cont) {
        if (c.is_string()) {
            znames.push_back(c.get<std::string>());
            zspecs.emplace_back();
        } else if (c.is_object() && c.contains("name") && c["name"].is_string()) {
            for (auto it = c.begin(); it != c.end(); ++it) {
                if (it.key() != "name" && it.key() != "lower" && it.key() != "upper" && it.key() != "degree") {
                    throw ConfigError("continuous covariate entry has unknown key '" + it.key() + "'");
                }
            }
            znames.push_back(c["name"].get<std::string>());
            const bool has_lower = c.contains("lower"), has_upper = c.contains("upper");
            if (has_lower != has_upper) throw ConfigError("continuous covariate '" + znames.back() + "' needs both lower and upper");
            BasisSpec s{c.value("degree", degree), 0.0, 1.0};
            if (has_lower) {
                if (!c["lower"].is_number() || !c["upper"].is_number()) {
                    throw ConfigError("continuous covariate '" + znames.back() + "': lower and upper must be numbers");
                }
                s.lower = c["lower"].get<double>();
                s.upper = c["upper"].get<double>();
                try {
                    s.validate();
                } catch (const std::exception& e) {
                    throw ConfigError("continuous covariate '" + znames.back() + "': " + e.what());
                }
                zspecs.emplace_back(s);
            } else {
                zspecs.emplace_back(std::nullopt);
                if (c.contains("degree")) zspecs.back() = BasisSpec{s.degree, std::nan(""), std::nan("")};
            }
        } else {
            throw ConfigError("config key data.continuous: entries must be names or {name, lower, upper, degree}");
        }
    }
    for (const auto& z : znames) zcols.push_back(require(z, "continuous"));

    std::vector<std::string> xnames;
    const json& pen = at(cfg, "/data/penalized");
    if (pen.is_string() && pen.get<std::string>() == "*") {
        for (const auto& h : t.header)
            if (!claimed.count(h)) xnames.push_back(h);
    } else {
        xnames = get_strings(cfg, "/data/penalized");
    }
    std::vector<std::size_t> xcols;
    for (const auto& x : xnames) xcols.push_back(require(x, "penalized"));

    LoadedData out;
    out.source = t.source;
    Dataset& d = out.data;
    const auto n = static_cast<Eigen::Index>(t.size());
    if (n == 0) throw DataError(t.source + ": no data rows");
    d.y.resize(n);
    d.x.resize(n, static_cast<Eigen::Index>(xcols.size()));
    d.w.resize(n, static_cast<Eigen::Index>(wcols.size()));
    d.z.resize(n, static_cast<Eigen::Index>(zcols.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        d.y[i] = t.number(r, ycol);
        for (std::size_t j = 0; j < xcols.size(); ++j) d.x(i, static_cast<Eigen::Index>(j)) = t.number(r, xcols[j]);
        for (std::size_t j = 0; j < wcols.size(); ++j) {
            const double v = t.number(r, wcols[j]);
            if (std::isnan(v)) throw DataError(t.where(r, wcols[j]) + ": missing value");
            d.w(i, static_cast<Eigen::Index>(j)) = v;
        }
        for (std::size_t j = 0; j < zcols.size(); ++j) {
            const double v = t.number(r, zcols[j]);
            if (std::isnan(v)) throw DataError(t.where(r, zcols[j]) + ": missing value");
            d.z(i, static_cast<Eigen::Index>(j)) = v;
        }
    }
    check_response(d.y, family, [&](Eigen::Index i) { return t.where(static_cast<std::size_t>(i), ycol); });
    for (const int m : impute_column_means(d.x)) out.imputed += m;
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
        if (std::isnan(d.x(0, j))) {
            throw DataError(t.source + ": penalized column '" + xnames[static_cast<std::size_t>(j)] + "' has no values");
        }
    }

    for (std::size_t j = 0; j < zcols.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        BasisSpec s;
        if (zspecs[j] && !std::isnan(zspecs[j]->lower)) {
            s = *zspecs[j];
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!s.contains(d.z(i, jj))) {
                    std::ostringstream msg;
                    msg << t.where(static_cast<std::size_t>(i), zcols[j]) << ": value " << format_number(d.z(i, jj))
                        << " outside the declared range [" << format_number(s.lower) << ", " << format_number(s.upper) << "]";
                    throw DataError(msg.str());
                }
            }
        } else {
            s.degree = zspecs[j] ? zspecs[j]->degree : degree;
            s.lower = d.z.col(jj).minCoeff();
            s.upper = d.z.col(jj).maxCoeff();
            if (!(s.lower < s.upper)) throw DataError(t.source + ": continuous column '" + znames[j] + "' is constant");
        }
        d.z_specs.push_back(s);
    }
    d.x_names = xnames;
    d.w_names = wnames;
    d.z_names = znames;
    return out;
}

LoadedData load_data(json& cfg) {
    const bool generated = !at(cfg, "/data/scenario").is_null();
    const bool from_file = !at(cfg, "/data/path").is_null();
    if (generated == from_file) throw ConfigError("set exactly one of data.path and data.scenario");
    if (generated) return load_scenario_data(cfg);
    Family family;
    try {
        family = Family::parse(get_string(cfg, "/family"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return load_table_data(cfg, family);
}

// --- fitting ------------------------------------------------------------------

struct FitSettings {
    std::string method;
    LambdaCriterion criterion = LambdaCriterion::bic;
    std::optional<double> lambda;
    int folds = 10;
    std::uint64_t seed = 1;
    BarControls bar;
    CcdControls ccd;
};

struct FitOutcome {
    CoefficientBlocks coefficients;
    bool converged = false;
    json diagnostics;
};

FitSettings read_fit_settings(const json& cfg) {
    FitSettings s;
    s.method = get_string(cfg, "/fit/method");
    if (s.method != "bar" && s.method != "lasso" && s.method != "alasso") {
        throw ConfigError("fit.method must be one of bar, lasso, alasso; got '" + s.method + "'");
    }
    try {
        s.criterion = parse_criterion(get_string(cfg, "/fit/criterion"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    s.lambda = get_optional_number(cfg, "/fit/lambda");
    if (s.lambda && !(*s.lambda >= 0.0 && std::isfinite(*s.lambda))) throw ConfigError("fit.lambda must be non-negative");
    if (s.lambda && s.method == "bar" && !(*s.lambda > 0.0)) throw ConfigError("fit.lambda must be positive for bar");
    s.folds = positive_int(cfg, "/fit/folds", 2);
    s.seed = static_cast<std::uint64_t>(get_integer(cfg, "/seed"));
    s.bar.xi = get_number(cfg, "/fit/xi");
    s.bar.outer_tolerance = get_number(cfg, "/bar/outer_tolerance");
    s.bar.max_outer_iterations = positive_int(cfg, "/bar/max_outer_iterations");
    s.bar.freeze_threshold = get_number(cfg, "/bar/freeze_threshold");
    s.ccd.max_passes = positive_int(cfg, "/ccd/max_passes");
    s.ccd.tolerance = get_number(cfg, "/ccd/tolerance");
    try {
        s.bar.validate();
        s.ccd.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return s;
}

FitOutcome run_fit(const Dataset& data, const Family& family, const FitSettings& s) {
    const SieveDesign design = SieveDesign::build(data);
    FitOutcome out;
    out.diagnostics["method"] = s.method;
    if (s.method == "bar") {
        BarControls c = s.bar;
        c.lambda = s.lambda ? *s.lambda : select_lambda_fixed(s.criterion, static_cast<double>(data.rows()));
        const FitResult fit = bar_fit(design, data.y, family, c, s.ccd);
        out.coefficients = fit.coefficients;
        out.converged = fit.converged;
        out.diagnostics["lambda"] = c.lambda;
        out.diagnostics["outer_iterations"] = fit.outer_iterations;
        out.diagnostics["inner_passes"] = fit.inner_passes;
        out.diagnostics["inner_converged"] = fit.inner_converged;
        out.diagnostics["final_max_change"] = fit.max_change_log.empty() ? 0.0 : fit.max_change_log.back();
        out.diagnostics["stationarity"] = stationarity_check(fit, design, data.y, family, c.lambda);
        return out;
    }
    const BaselineMethod m = s.method == "lasso" ? BaselineMethod::lasso : BaselineMethod::adaptive_lasso;
    if (s.lambda) {
        if (m == BaselineMethod::lasso) {
            out.coefficients = lasso_fit(design, data.y, family, *s.lambda, s.ccd);
        } else {
            const CoefficientBlocks pilot = ridge_pilot(design, data.y, family, 1.0, s.ccd);
            out.coefficients = adaptive_lasso_fit(design, data.y, family, *s.lambda, pilot, s.ccd);
        }
        const PenaltyMap pen = weighted_l1_penalty(
            design.blocks, *s.lambda,
            m == BaselineMethod::lasso ? std::vector<double>(static_cast<std::size_t>(design.blocks.beta_count), 1.0)
                                       : adaptive_weights(ridge_pilot(design, data.y, family, 1.0, s.ccd).beta));
        const CcdResult check = ccd_fit(design.columns, data.y, family, pen, s.ccd, out.coefficients.flatten());
        out.converged = check.converged;
        out.diagnostics["lambda"] = *s.lambda;
        return out;
    }
    CvSpec spec;
    spec.folds = s.folds;
    spec.seed = s.seed;
    const CvResult cv = cross_validate(design, data.y, family, m, spec, s.ccd);
    out.coefficients = cv.best(design.blocks);
    out.converged = cv.full_path.converged[cv.best_index];
    out.diagnostics["lambda"] = cv.best_lambda;
    out.diagnostics["cv_points"] = cv.lambdas.size();
    out.diagnostics["cv_deviance"] = cv.mean_deviance[cv.best_index];
    out.diagnostics["fold_attempts"] = cv.fold_attempts;
    return out;
}

// --- output -------------------------------------------------------------------

struct OutputTable {
    std::string file;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct RunContext {
    std::string command;
    json config;  // resolved, including threads
    int threads = 1;
    std::ostream* out = nullptr;
};

std::string num(double v) { return format_number(v, 17); }
std::string human(double v) { return format_number(v, 4); }

// where and how wide a run executes never changes what it computes
json without_threads(const json& cfg) {
    json c = cfg;
    c.erase("threads");
    c.erase("output");
    return c;
}

void write_outputs(const RunContext& ctx, const std::vector<OutputTable>& tables, const json& diagnostics) {
    const json resolved = without_threads(ctx.config);
    const std::string hash = manifest_hash(ctx.command, resolved);
    const std::string comment = std::string("gplmbar ") + kVersion + " manifest " + hash;
    const fs::path dir = get_string(ctx.config, "/output");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error(dir.string() + ": cannot create output directory: " + ec.message());
    json manifest;
    manifest["tool"] = "gplmbar";
    manifest["version"] = kVersion;
    manifest["command"] = ctx.command;
    manifest["config"] = resolved;
    manifest["config_hash"] = hash;
    manifest["diagnostics"] = diagnostics;
    manifest["outputs"] = json::array();
    for (const auto& t : tables) {
        write_table(dir / t.file, comment, t.columns, t.rows);
        manifest["outputs"].push_back(t.file);
    }
    std::ofstream m(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    m << "// " << comment << '\n' << manifest.dump(2) << '\n';
    if (!m) throw std::runtime_error((dir / "manifest.json").string() + ": write failed");
}

std::string safe_file_part(std::string s) {
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return s;
}

std::vector<OutputTable> curve_tables(const Dataset& data, const CoefficientBlocks& coef, int points) {
    std::vector<OutputTable> out;
    Eigen::Index offset = 0;
    for (std::size_t j = 0; j < data.z_specs.size(); ++j) {
        const BasisSpec& spec = data.z_specs[j];
        const auto grid = uniform_grid(spec, points);
        const auto psi = evaluate_psi(std::span<const double>(coef.gamma.data() + offset, static_cast<std::size_t>(spec.degree)),
                                      spec, grid);
        OutputTable t{"curve_" + safe_file_part(data.z_names[j]) + ".tsv", {"z", "psi_hat"}, {}};
        for (std::size_t k = 0; k < grid.size(); ++k) t.rows.push_back({num(grid[k]), num(psi[k])});
        out.push_back(std::move(t));
        offset += spec.degree;
    }
    return out;
}

std::string block_of(const BlockMap& map, Eigen::Index c) {
    if (c == BlockMap::intercept) return "intercept";
    if (c < map.gamma_begin()) return "alpha";
    if (c < map.beta_begin()) return "gamma";
    return "beta";
}

Eigen::Index index_in_block(const BlockMap& map, Eigen::Index c) {
    if (c == BlockMap::intercept) return 0;
    if (c < map.gamma_begin()) return c - map.w_begin();
    if (c < map.beta_begin()) return c - map.gamma_begin();
    return c - map.beta_begin();
}

Family resolved_family(const json& cfg) {
    try {
        return Family::parse(get_string(cfg, "/family"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// --- commands -----------------------------------------------------------------

int cmd_fit(RunContext& ctx, bool bootstrap_only) {
    LoadedData loaded = load_data(ctx.config);
    const Family family = resolved_family(ctx.config);
    const FitSettings settings = read_fit_settings(ctx.config);
    const int curve_points = positive_int(ctx.config, "/fit/curve_points", 2);
    const int resamples = bootstrap_only ? positive_int(ctx.config, "/fit/bootstrap", 2)
                                         : positive_int(ctx.config, "/fit/bootstrap", 0);
    if (resamples == 1) throw ConfigError("fit.bootstrap must be 0 or at least 2");
    const Dataset& data = loaded.data;
    data.validate();
    const SieveDesign design = SieveDesign::build(data);

    const FitOutcome fit = run_fit(data, family, settings);
    std::optional<BootstrapResult> boot;
    if (resamples >= 2) {
        const std::uint64_t boot_seed = splitmix64(settings.seed ^ 0xb007ULL);
        boot = bootstrap_se(
            data, [&](const Dataset& d) { return run_fit(d, family, settings).coefficients; }, resamples,
            stratified_resampler(data.y, family, boot_seed), ctx.threads);
    }

    const BlockMap& map = design.blocks;
    const auto names = coefficient_names(data, map);
    const Eigen::VectorXd flat = fit.coefficients.flatten();
    const Eigen::VectorXd se = boot ? boot->standard_error.flatten() : Eigen::VectorXd();

    std::vector<OutputTable> tables;
    OutputTable coef{bootstrap_only ? "bootstrap.tsv" : "coefficients.tsv", {"block", "name", "index", "estimate"}, {}};
    if (boot) {
        coef.columns.push_back("se");
        coef.columns.push_back("selection_frequency");
    }
    for (Eigen::Index c = 0; c < map.total(); ++c) {
        std::vector<std::string> row{block_of(map, c), names[static_cast<std::size_t>(c)],
                                     std::to_string(index_in_block(map, c)), num(flat[c])};
        if (boot) {
            row.push_back(num(se[c]));
            row.push_back(map.is_beta(c) ? num(boot->selection_frequency[static_cast<std::size_t>(c - map.beta_begin())])
                                         : std::string("nan"));
        }
        coef.rows.push_back(std::move(row));
    }
    tables.push_back(std::move(coef));

    OutputTable support{"support.tsv", {"index", "name", "estimate"}, {}};
    std::vector<std::vector<std::string>> human_rows;
    for (Eigen::Index j = 0; j < map.beta_count; ++j) {
        const double b = fit.coefficients.beta[j];
        if (b == 0.0) continue;
        const std::string& name = data.x_names[static_cast<std::size_t>(j)];
        support.rows.push_back({std::to_string(j), name, num(b)});
        human_rows.push_back({name, human(b)});
    }
    if (!bootstrap_only) {
        tables.push_back(std::move(support));
        for (auto& t : curve_tables(data, fit.coefficients, curve_points)) tables.push_back(std::move(t));
    }

    json diag = fit.diagnostics;
    diag["converged"] = fit.converged;
    diag["rows"] = data.rows();
    diag["support_size"] = human_rows.size();
    diag["imputed_values"] = loaded.imputed;
    diag["source"] = loaded.source;
    if (boot) {
        diag["bootstrap_requested"] = boot->requested;
        diag["bootstrap_effective"] = boot->effective;
        diag["bootstrap_errors"] = boot->errors;
    }
    write_outputs(ctx, tables, diag);

    std::ostream& out = *ctx.out;
    out << ctx.command << ": " << settings.method << " on " << data.rows() << " rows, " << map.beta_count
        << " penalized columns; converged " << (fit.converged ? "yes" : "no") << '\n';
    if (loaded.imputed > 0) out << loaded.imputed << " missing penalized values mean-imputed\n";
    if (boot) out << "bootstrap: " << boot->effective << " of " << boot->requested << " resamples succeeded\n";
    out << "selected " << human_rows.size() << " of " << map.beta_count << '\n';
    if (!human_rows.empty()) out << render_aligned({"name", "estimate"}, human_rows);
    return fit.converged ? exit_ok : exit_not_converged;
}

int cmd_simulate(RunContext& ctx) {
    const json& cfg = ctx.config;
    const std::string name = get_string(cfg, "/simulate/scenario");
    ScenarioConfig sc;
    try {
        sc = ScenarioConfig::preset(name, positive_int(cfg, "/simulate/n", 2), positive_int(cfg, "/simulate/p", 1));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    sc.seed = static_cast<std::uint64_t>(get_integer(cfg, "/seed"));
    sc.degree = positive_int(cfg, "/data/degree");
    const int replications = positive_int(cfg, "/simulate/replications");
    sc.replications = replications;
    std::vector<ScenarioMethod> methods;
    for (const auto& m : get_strings(cfg, "/simulate/methods")) {
        try {
            const ScenarioMethod parsed = parse_method(m);
            if (std::find(methods.begin(), methods.end(), parsed) != methods.end()) {
                throw ConfigError("method '" + m + "' listed twice");
            }
            methods.push_back(parsed);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (methods.empty()) throw ConfigError("simulate.methods is empty");
    const bool bias = at(cfg, "/simulate/bias").is_boolean() ? at(cfg, "/simulate/bias").get<bool>()
                                                              : throw ConfigError("simulate.bias must be true or false");
    StudyOptions opt;
    opt.threads = ctx.threads;
    opt.cv.folds = positive_int(cfg, "/simulate/folds", 2);
    opt.curve_points = positive_int(cfg, "/simulate/curve_points", 2);
    opt.ccd.max_passes = positive_int(cfg, "/ccd/max_passes");
    opt.ccd.tolerance = get_number(cfg, "/ccd/tolerance");
    try {
        opt.ccd.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const StudyResult study = run_replications(sc, methods, replications, opt);

    std::vector<OutputTable> tables;
    OutputTable summary{"summary.tsv", {"method", "MMSE", "MMSE_sd", "TP", "FP", "MS", "MC", "TM", "R_effective"}, {}};
    std::vector<std::vector<std::string>> human_rows;
    for (const auto& s : study.summaries) {
        summary.rows.push_back({s.method, num(s.mmse), num(s.mmse_sd), num(s.tp), num(s.fp), num(s.ms), num(s.mc),
                                num(s.tm), std::to_string(s.r_effective)});
        human_rows.push_back({s.method, human(s.mmse), human(s.mmse_sd), human(s.tp), human(s.fp), human(s.ms),
                              human(s.mc), human(s.tm), std::to_string(s.r_effective)});
    }
    tables.push_back(std::move(summary));

    for (std::size_t j = 0; j < sc.psi.size(); ++j) {
        const BasisSpec spec = psi_domain(sc.psi[j], sc.degree);
        const auto grid = uniform_grid(spec, opt.curve_points);
        OutputTable t{"curve_" + safe_file_part(sc.psi[j]) + ".tsv", {"z", "truth"}, {}};
        for (ScenarioMethod m : methods) t.columns.push_back(to_string(m));
        const double centre = psi_true(sc.psi[j], spec.midpoint());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            std::vector<std::string> row{num(grid[k]), num(psi_true(sc.psi[j], grid[k]) - centre)};
            for (std::size_t m = 0; m < methods.size(); ++m) {
                const auto& curves = study.curves[m];
                row.push_back(curves.empty() ? std::string("nan") : num(curves[j].mean[k]));
            }
            t.rows.push_back(std::move(row));
        }
        tables.push_back(std::move(t));
    }

    OutputTable reps{"replications.tsv", {"replication", "method", "ok", "converged", "TP", "FP", "MS", "MC", "TM", "MSE"}, {}};
    bool all_converged = true;
    int failures = 0;
    for (const auto& r : study.records) {
        const bool requested = std::find(methods.begin(), methods.end(), parse_method(r.method)) != methods.end();
        if (!requested) continue;
        all_converged = all_converged && r.ok && r.converged;
        failures += r.ok ? 0 : 1;
        reps.rows.push_back({std::to_string(r.replication), r.method, r.ok ? "1" : "0", r.converged ? "1" : "0",
                             std::to_string(r.metrics.tp), std::to_string(r.metrics.fp), std::to_string(r.metrics.ms),
                             std::to_string(r.metrics.mc), r.metrics.tm ? "1" : "0",
                             r.ok ? num(r.metrics.mse) : std::string("nan")});
    }
    tables.push_back(std::move(reps));

    if (bias) {
        OutputTable b{"bias.tsv", {"method", "index", "truth", "mean_estimate", "bias", "sd"}, {}};
        for (ScenarioMethod m : methods) {
            const std::string label = to_string(m);
            std::vector<const ReplicationRecord*> ok;
            for (const auto& r : study.records)
                if (r.ok && r.method == label) ok.push_back(&r);
            for (Eigen::Index j = 0; j < sc.p; ++j) {
                double mean = 0.0, ss = 0.0;
                for (const auto* r : ok) mean += r->coefficients.beta[j];
                if (!ok.empty()) mean /= static_cast<double>(ok.size());
                for (const auto* r : ok) ss += (r->coefficients.beta[j] - mean) * (r->coefficients.beta[j] - mean);
                const double sd = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
                const double truth = sc.beta0[j];
                b.rows.push_back({label, std::to_string(j), num(truth), ok.empty() ? "nan" : num(mean),
                                  ok.empty() ? "nan" : num(mean - truth), num(sd)});
            }
        }
        tables.push_back(std::move(b));
    }

    json diag;
    diag["replications"] = replications;
    diag["failures"] = failures;
    diag["all_converged"] = all_converged;
    diag["family"] = sc.family.name();
    diag["signals"] = sc.signal_count();
    json per_method = json::object();
    for (const auto& s : study.summaries) per_method[s.method] = {{"r_effective", s.r_effective}, {"failures", s.failures}};
    diag["methods"] = per_method;
    write_outputs(ctx, tables, diag);

    std::ostream& out = *ctx.out;
    out << "scenario " << sc.name << ": n = " << sc.n << ", p = " << sc.p << ", " << replications << " replications, "
        << sc.family.name() << '\n';
    out << render_aligned({"method", "MMSE", "MMSE_sd", "TP", "FP", "MS", "MC", "TM", "R_effective"}, human_rows);
    if (failures > 0) out << failures << " replication fits failed and were excluded\n";
    return all_converged ? exit_ok : exit_not_converged;
}

int cmd_path(RunContext& ctx) {
    const std::vector<double> grid = get_numbers(ctx.config, "/path/xi_grid");
    if (grid.empty()) throw ConfigError("path.xi_grid is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > 0.0)) throw ConfigError("path.xi_grid values must be positive");
        if (k > 0 && !(grid[k] > grid[k - 1])) throw ConfigError("path.xi_grid must be strictly ascending");
    }
    std::vector<LambdaCriterion> criteria;
    for (const auto& c : get_strings(ctx.config, "/path/criteria")) {
        try {
            criteria.push_back(parse_criterion(c));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (criteria.empty()) throw ConfigError("path.criteria is empty");
    LoadedData loaded = load_data(ctx.config);
    const Family family = resolved_family(ctx.config);
    const FitSettings settings = read_fit_settings(ctx.config);
    const Dataset& data = loaded.data;
    const SieveDesign design = SieveDesign::build(data);

    std::vector<std::vector<PathPoint>> paths(criteria.size());
    std::vector<double> lambdas(criteria.size());
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        lambdas[c] = select_lambda_fixed(criteria[c], static_cast<double>(data.rows()));
    }
    parallel_for(criteria.size(), resolve_threads(ctx.threads), [&](std::size_t c) {
        paths[c] = bar_path(design, data.y, family, grid, lambdas[c], settings.bar, settings.ccd);
    });

    OutputTable t{"path.tsv", {"criterion", "lambda", "xi", "index", "name", "coefficient"}, {}};
    json diag = json::array();
    bool all_ok = true;
    std::vector<std::vector<std::string>> human_rows;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        for (const auto& pt : paths[c]) {
            all_ok = all_ok && pt.ok && pt.converged;
            for (Eigen::Index j = 0; j < design.blocks.beta_count; ++j) {
                t.rows.push_back({to_string(criteria[c]), num(lambdas[c]), num(pt.xi), std::to_string(j),
                                  data.x_names[static_cast<std::size_t>(j)], pt.ok ? num(pt.beta[j]) : std::string("nan")});
            }
            json d{{"criterion", to_string(criteria[c])}, {"xi", pt.xi}, {"ok", pt.ok}, {"converged", pt.converged}};
            std::vector<std::string> names;
            for (Eigen::Index j : pt.support) names.push_back(data.x_names[static_cast<std::size_t>(j)]);
            d["support"] = names;
            if (!pt.ok) d["error"] = pt.error;
            diag.push_back(d);
            std::string listed;
            for (const auto& nm : names) listed += (listed.empty() ? "" : ",") + nm;
            human_rows.push_back({to_string(criteria[c]), human(pt.xi), pt.ok ? std::to_string(pt.support.size()) : "failed",
                                  listed});
        }
    }
    write_outputs(ctx, {t}, json{{"points", diag}, {"source", loaded.source}});
    *ctx.out << render_aligned({"criterion", "xi", "size", "support"}, human_rows);
    return all_ok ? exit_ok : exit_not_converged;
}

int cmd_screen(RunContext& ctx) {
    const json& cfg = ctx.config;
    const auto geno_path = get_optional_string(cfg, "/screen/genotypes");
    const auto pheno_path = get_optional_string(cfg, "/screen/phenotypes");
    if (!geno_path || !pheno_path) throw ConfigError("screen needs screen.genotypes and screen.phenotypes");
    const std::string id = get_string(cfg, "/screen/id");
    const std::string response = get_string(cfg, "/screen/response");
    const double maf = get_number(cfg, "/screen/maf");
    const double pval = get_number(cfg, "/screen/p_value");
    if (!(maf >= 0.0 && maf <= 0.5)) throw ConfigError("screen.maf must be in [0, 0.5]");
    if (!(pval >= 0.0 && pval <= 1.0)) throw ConfigError("screen.p_value must be in [0, 1]");
    const Family family = resolved_family(cfg);

    const Table geno = read_table(*geno_path);
    const Table pheno = read_table(*pheno_path);
    if (!geno.find(id)) throw ConfigError("id column '" + id + "' is not in " + geno.source);
    if (!pheno.find(id)) throw ConfigError("id column '" + id + "' is not in " + pheno.source);
    if (!pheno.find(response)) throw ConfigError("response column '" + response + "' is not in " + pheno.source);
    const Table joined = join_by_id(pheno, id, geno, id);

    std::vector<std::string> pheno_columns;
    for (const auto& h : pheno.header) pheno_columns.push_back(h);
    std::vector<std::size_t> gcols;
    std::vector<std::string> gnames;
    for (std::size_t c = pheno.header.size(); c < joined.header.size(); ++c) {
        gcols.push_back(c);
        gnames.push_back(joined.header[c]);
    }
    const std::size_t ycol = *joined.find(response);
    const auto n = static_cast<Eigen::Index>(joined.size());
    if (n == 0) throw DataError(joined.source + ": no rows after joining");
    Dataset d;
    d.y.resize(n);
    d.x.resize(n, static_cast<Eigen::Index>(gcols.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        d.y[i] = joined.number(r, ycol);
        for (std::size_t j = 0; j < gcols.size(); ++j) {
            const double g = joined.number(r, gcols[j]);
            if (!std::isnan(g) && g != 0.0 && g != 1.0 && g != 2.0) {
                throw DataError(joined.where(r, gcols[j]) + ": genotype must be 0, 1, 2 or empty, got " + format_number(g));
            }
            d.x(i, static_cast<Eigen::Index>(j)) = g;
        }
    }
    // joined rows follow the phenotype file, so locations point there
    check_response(d.y, family, [&](Eigen::Index i) { return pheno.where(static_cast<std::size_t>(i), *pheno.find(response)); });
    d.x_names = gnames;

    const ScreenReport report = screen_genotypes(d, family, maf, pval, ctx.threads);

    OutputTable rep{"report.tsv",
                    {"index", "name", "maf", "missing", "tested", "coefficient", "se", "p_value", "separated", "retained"},
                    {}};
    std::vector<bool> kept(gcols.size(), false);
    for (Eigen::Index j : report.retained) kept[static_cast<std::size_t>(j)] = true;
    for (std::size_t j = 0; j < gcols.size(); ++j) {
        const auto& u = report.univariate[j];
        const bool tested = report.tested[j];
        rep.rows.push_back({std::to_string(j), gnames[j], num(report.maf[j]), std::to_string(report.missing[j]),
                            tested ? "1" : "0", tested ? num(u.coefficient) : "nan", tested ? num(u.standard_error) : "nan",
                            tested ? num(u.p_value) : "nan", u.separated ? "1" : "0", kept[j] ? "1" : "0"});
    }
    OutputTable filtered{"filtered.tsv", pheno_columns, {}};
    for (Eigen::Index j : report.retained) filtered.columns.push_back(gnames[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<std::string> row(joined.rows[static_cast<std::size_t>(i)].begin(),
                                     joined.rows[static_cast<std::size_t>(i)].begin() +
                                         static_cast<std::ptrdiff_t>(pheno_columns.size()));
        for (Eigen::Index j : report.retained) row.push_back(num(d.x(i, j)));
        filtered.rows.push_back(std::move(row));
    }
    int imputed = 0;
    for (int m : report.missing) imputed += m;
    json diag{{"columns", gcols.size()},
              {"retained", report.retained.size()},
              {"imputed_values", imputed},
              {"warnings", report.warnings},
              {"rows", n}};
    write_outputs(ctx, {rep, filtered}, diag);

    std::ostream& out = *ctx.out;
    std::size_t maf_pass = 0;
    for (bool t : report.tested) maf_pass += t ? 1 : 0;
    out << "screen: " << gcols.size() << " variants, " << maf_pass << " pass MAF >= " << human(maf) << ", "
        << report.retained.size() << " retained at p < " << human(pval) << '\n';
    for (const auto& w : report.warnings) out << "warning: " << w << '\n';
    return exit_ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparse partly linear GLM fitting with broken adaptive ridge", "gplmbar"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("gplmbar ") + kVersion);
    std::string config_path;
    Overrides overrides;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "JSON config file (comments allowed)");
        overrides.add(sub, "-o,--output", "/output", Kind::text, "Output directory");
        overrides.add(sub, "--seed", "/seed", Kind::integer, "Base random seed");
        overrides.add(sub, "--threads", "/threads", Kind::integer, "Worker threads (0: GPLMBAR_THREADS or hardware)");
        overrides.add(sub, "--family", "/family", Kind::text, "logistic or poisson");
    };
    auto data_options = [&](CLI::App* sub) {
        overrides.add(sub, "--data", "/data/path", Kind::text, "Delimited input file with header");
        overrides.add(sub, "--id", "/data/id", Kind::text, "Sample id column (excluded from the model)");
        overrides.add(sub, "--response", "/data/response", Kind::text, "Response column");
        overrides.add(sub, "--penalized", "/data/penalized", Kind::text_list, "Penalized columns, or * for the rest");
        overrides.add(sub, "--categorical", "/data/categorical", Kind::text_list, "Unpenalized linear columns");
        overrides.add(sub, "--continuous", "/data/continuous", Kind::text_list, "Columns modelled by a Bernstein sieve");
        overrides.add(sub, "--degree", "/data/degree", Kind::integer, "Bernstein degree");
        overrides.add(sub, "--scenario", "/data/scenario", Kind::text, "Generate data from a preset instead (s1, s2, s4)");
        overrides.add(sub, "--n", "/data/n", Kind::integer, "Rows of generated data");
        overrides.add(sub, "--p", "/data/p", Kind::integer, "Penalized columns of generated data");
        overrides.add(sub, "--replication", "/data/replication", Kind::integer, "Replication index of generated data");
    };
    auto fit_options = [&](CLI::App* sub) {
        overrides.add(sub, "--method", "/fit/method", Kind::text, "bar, lasso or alasso");
        overrides.add(sub, "--criterion", "/fit/criterion", Kind::text, "aic or bic (bar)");
        overrides.add(sub, "--lambda", "/fit/lambda", Kind::real, "Fixed lambda (skips the criterion or CV)");
        overrides.add(sub, "--xi", "/fit/xi", Kind::real, "Ridge precision of the BAR start");
        overrides.add(sub, "--folds", "/fit/folds", Kind::integer, "CV folds (lasso, alasso)");
        overrides.add(sub, "--curve-points", "/fit/curve_points", Kind::integer, "Grid size of curve files");
    };

    CLI::App* fit = app.add_subcommand("fit", "Fit one model and write coefficients, support and curves");
    common(fit);
    data_options(fit);
    fit_options(fit);
    overrides.add(fit, "--bootstrap", "/fit/bootstrap", Kind::integer, "Bootstrap resamples for standard errors (0: none)");

    CLI::App* boot = app.add_subcommand("bootstrap", "Bootstrap standard errors and selection frequencies");
    common(boot);
    data_options(boot);
    fit_options(boot);
    overrides.add(boot, "-B,--resamples", "/fit/bootstrap", Kind::integer, "Bootstrap resamples");

    CLI::App* sim = app.add_subcommand("simulate", "Replicated simulation study on a preset scenario");
    common(sim);
    overrides.add(sim, "--scenario", "/simulate/scenario", Kind::text, "s1, s2 or s4");
    overrides.add(sim, "--n", "/simulate/n", Kind::integer, "Rows per replication");
    overrides.add(sim, "--p", "/simulate/p", Kind::integer, "Penalized columns");
    overrides.add(sim, "-R,--replications", "/simulate/replications", Kind::integer, "Replications");
    overrides.add(sim, "--methods", "/simulate/methods", Kind::text_list, "bar-aic, bar-bic, lasso, alasso, oracle");
    overrides.add(sim, "--bias", "/simulate/bias", Kind::flag, "Also write the per-coefficient bias table");
    overrides.add(sim, "--folds", "/simulate/folds", Kind::integer, "CV folds for lasso and alasso");
    overrides.add(sim, "--curve-points", "/simulate/curve_points", Kind::integer, "Grid size of curve files");

    CLI::App* path = app.add_subcommand("path", "BAR coefficient paths over a grid of ridge precisions");
    common(path);
    data_options(path);
    overrides.add(path, "--xi-grid", "/path/xi_grid", Kind::real_list, "Ascending ridge precisions");
    overrides.add(path, "--criteria", "/path/criteria", Kind::text_list, "aic and/or bic");

    CLI::App* screen = app.add_subcommand("screen", "MAF filter and univariate screen of a genotype panel");
    common(screen);
    overrides.add(screen, "--genotypes", "/screen/genotypes", Kind::text, "Genotype file: id, then one column per variant");
    overrides.add(screen, "--phenotypes", "/screen/phenotypes", Kind::text, "Phenotype file keyed by id");
    overrides.add(screen, "--id", "/screen/id", Kind::text, "Id column in both files");
    overrides.add(screen, "--response", "/screen/response", Kind::text, "Response column in the phenotype file");
    overrides.add(screen, "--maf", "/screen/maf", Kind::real, "Minimum minor allele frequency");
    overrides.add(screen, "--p-value", "/screen/p_value", Kind::real, "Univariate p-value threshold");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_config;
    }

    RunContext ctx;
    ctx.out = &out;
    for (CLI::App* sub : {fit, boot, sim, path, screen})
        if (sub->parsed()) ctx.command = sub->get_name();

    try {
        json cfg = default_config();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError(config_path + ": cannot open config file");
            json file;
            try {
                file = json::parse(in, nullptr, true, true);
            } catch (const json::parse_error& e) {
                throw ConfigError(config_path + ": " + e.what());
            }
            merge_config(cfg, file);
        }
        overrides.apply(cfg);
        const long long threads = get_integer(cfg, "/threads");
        if (threads < 0) throw ConfigError("threads must be non-negative");
        get_integer(cfg, "/seed");
        get_string(cfg, "/output");
        ctx.threads = static_cast<int>(resolve_threads(static_cast<int>(threads)));
        ctx.config = std::move(cfg);

        if (ctx.command == "fit") return cmd_fit(ctx, false);
        if (ctx.command == "bootstrap") return cmd_fit(ctx, true);
        if (ctx.command == "simulate") return cmd_simulate(ctx);
        if (ctx.command == "path") return cmd_path(ctx);
        return cmd_screen(ctx);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const DomainError& e) {
        err << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
}

}  // namespace gplmbar::cli
