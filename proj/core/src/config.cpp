#include "dps/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "dps/errors.hpp"
#include "dps/operators.hpp"

namespace dps {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + ": " + what);
}

void expect_keys(const json& obj, const std::string& path,
                 const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            fail(path.empty() ? key : path + "." + key, "unknown key");
        }
    }
}

double get_number(const json& obj, const std::string& path) {
    if (!obj.is_number()) fail(path, "expected a number");
    return obj.get<double>();
}

int get_int(const json& obj, const std::string& path) {
    if (!obj.is_number_integer()) fail(path, "expected an integer");
    return obj.get<int>();
}

std::string get_string(const json& obj, const std::string& path) {
    if (!obj.is_string()) fail(path, "expected a string");
    return obj.get<std::string>();
}

bool get_bool(const json& obj, const std::string& path) {
    if (!obj.is_boolean()) fail(path, "expected a boolean");
    return obj.get<bool>();
}

Eigen::VectorXd get_vector(const json& obj, const std::string& path) {
    if (!obj.is_array() || obj.empty()) fail(path, "expected a non-empty array of numbers");
    Eigen::VectorXd v(obj.size());
    for (size_t i = 0; i < obj.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] =
            get_number(obj[i], path + "[" + std::to_string(i) + "]");
    }
    return v;
}

Covariance parse_covariance(const json& obj, const std::string& path,
                            Eigen::Index dim) {
    expect_keys(obj, path, {"diagonal", "dense", "scale"});
    if (obj.size() != 1) fail(path, "give exactly one of diagonal/dense/scale");
    if (obj.contains("scale")) {
        double s = get_number(obj["scale"], path + ".scale");
        if (s <= 0.0) fail(path + ".scale", "must be > 0");
        return Covariance::diagonal(Eigen::VectorXd::Constant(dim, s));
    }
    if (obj.contains("diagonal")) {
        Eigen::VectorXd d = get_vector(obj["diagonal"], path + ".diagonal");
        if (d.size() != dim) fail(path + ".diagonal", "length must match the prior dimension");
        return Covariance::diagonal(d);
    }
    const json& rows = obj["dense"];
    if (!rows.is_array() || rows.size() != static_cast<size_t>(dim)) {
        fail(path + ".dense", "expected a " + std::to_string(dim) + "-row matrix");
    }
    Eigen::MatrixXd m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        Eigen::VectorXd row =
            get_vector(rows[static_cast<size_t>(i)], path + ".dense[" + std::to_string(i) + "]");
        if (row.size() != dim) fail(path + ".dense", "matrix must be square");
        m.row(i) = row;
    }
    return Covariance::dense(m);
}

MixtureComponent parse_component(const json& obj, const std::string& path,
                                 Eigen::Index dim, bool needs_weight) {
    expect_keys(obj, path, {"weight", "mean", "covariance"});
    MixtureComponent c;
    c.weight = 1.0;
    if (obj.contains("weight")) {
        if (!needs_weight) fail(path + ".weight", "weight only applies to mixture components");
        c.weight = get_number(obj["weight"], path + ".weight");
        if (c.weight <= 0.0) fail(path + ".weight", "must be > 0");
    }
    c.mean = obj.contains("mean") ? get_vector(obj["mean"], path + ".mean")
                                  : Eigen::VectorXd::Zero(dim);
    if (c.mean.size() != dim) fail(path + ".mean", "length must match the prior dimension");
    c.covariance = obj.contains("covariance")
                       ? parse_covariance(obj["covariance"], path + ".covariance", dim)
                       : Covariance::identity(dim);
    return c;
}

PriorSpec parse_prior(const json& obj, const std::string& path) {
    expect_keys(obj, path, {"type", "dimension", "mean", "covariance", "components"});
    if (!obj.contains("type")) fail(path + ".type", "required");
    std::string type = get_string(obj["type"], path + ".type");

    PriorSpec spec;
    if (type == "gaussian") {
        spec.kind = PriorSpec::Kind::gaussian;
        Eigen::Index dim = 0;
        if (obj.contains("dimension")) dim = get_int(obj["dimension"], path + ".dimension");
        if (obj.contains("mean")) {
            Eigen::VectorXd mean = get_vector(obj["mean"], path + ".mean");
            if (dim != 0 && mean.size() != dim) fail(path, "mean length contradicts dimension");
            dim = mean.size();
        }
        if (dim <= 0) fail(path, "gaussian prior needs dimension or mean");
        if (obj.contains("components")) fail(path + ".components", "only for gaussian_mixture");
        json flat = obj;
        flat.erase("type");
        flat.erase("dimension");
        spec.components.push_back(parse_component(flat, path, dim, false));
    } else if (type == "gaussian_mixture") {
        spec.kind = PriorSpec::Kind::gaussian_mixture;
        if (!obj.contains("dimension")) fail(path + ".dimension", "required for mixtures");
        Eigen::Index dim = get_int(obj["dimension"], path + ".dimension");
        if (dim <= 0) fail(path + ".dimension", "must be positive");
        if (obj.contains("mean") || obj.contains("covariance")) {
            fail(path, "mixtures declare mean/covariance per component");
        }
        if (!obj.contains("components") || !obj["components"].is_array() ||
            obj["components"].empty()) {
            fail(path + ".components", "expected a non-empty array");
        }
        for (size_t i = 0; i < obj["components"].size(); ++i) {
            spec.components.push_back(
                parse_component(obj["components"][i],
                                path + ".components[" + std::to_string(i) + "]", dim, true));
        }
    } else {
        fail(path + ".type", "unknown prior type '" + type + "'");
    }
    return spec;
}

OperatorSpec parse_operator(const json& obj, const std::string& path) {
    expect_keys(obj, path, {"kind", "factor", "radius", "sigma"});
    OperatorSpec spec;
    std::string kind =
        obj.contains("kind") ? get_string(obj["kind"], path + ".kind") : "identity";
    if (kind == "identity") {
        spec.kind = OperatorSpec::Kind::identity;
        if (obj.contains("factor") || obj.contains("radius") || obj.contains("sigma")) {
            fail(path, "identity takes no parameters");
        }
    } else if (kind == "downsample_avg") {
        spec.kind = OperatorSpec::Kind::downsample_avg;
        if (obj.contains("radius") || obj.contains("sigma")) {
            fail(path, "downsample_avg only takes factor");
        }
        if (obj.contains("factor")) spec.factor = get_int(obj["factor"], path + ".factor");
        if (spec.factor < 1) fail(path + ".factor", "must be >= 1");
    } else if (kind == "gaussian_blur") {
        spec.kind = OperatorSpec::Kind::gaussian_blur;
        if (obj.contains("factor")) fail(path, "gaussian_blur takes radius and sigma");
        if (obj.contains("radius")) spec.radius = get_int(obj["radius"], path + ".radius");
        if (obj.contains("sigma")) spec.sigma = get_number(obj["sigma"], path + ".sigma");
        if (spec.radius < 1) fail(path + ".radius", "must be >= 1");
        if (spec.sigma <= 0.0) fail(path + ".sigma", "must be > 0");
    } else {
        fail(path + ".kind", "unknown operator kind '" + kind + "'");
    }
    return spec;
}

DatasetSpec parse_dataset(const json& obj, const std::string& path,
                          Eigen::Index prior_dim) {
    expect_keys(obj, path, {"source", "count", "dimension", "height", "width",
                            "channels", "directory"});
    DatasetSpec spec;
    std::string source =
        obj.contains("source") ? get_string(obj["source"], path + ".source") : "synthetic";
    if (source == "synthetic") {
        spec.source = DatasetSpec::Source::synthetic;
        if (obj.contains("directory")) fail(path + ".directory", "only for image datasets");
        if (obj.contains("count")) spec.count = get_int(obj["count"], path + ".count");
        if (spec.count < 1) fail(path + ".count", "must be >= 1");
        bool has_dim = obj.contains("dimension");
        bool has_hw = obj.contains("height") || obj.contains("width") || obj.contains("channels");
        if (has_dim && has_hw) fail(path, "give dimension or height/width/channels, not both");
        if (has_dim) {
            int d = get_int(obj["dimension"], path + ".dimension");
            if (d < 1) fail(path + ".dimension", "must be >= 1");
            spec.shape = TensorShape{1, 1, d};
        } else if (has_hw) {
            spec.shape.height = obj.contains("height") ? get_int(obj["height"], path + ".height") : 1;
            spec.shape.width = obj.contains("width") ? get_int(obj["width"], path + ".width") : 1;
            spec.shape.channels =
                obj.contains("channels") ? get_int(obj["channels"], path + ".channels") : 1;
            if (spec.shape.height < 1 || spec.shape.width < 1 || spec.shape.channels < 1) {
                fail(path, "shape entries must be >= 1");
            }
        } else {
            spec.shape = TensorShape{1, 1, static_cast<int>(prior_dim)};
        }
        if (spec.shape.size() != prior_dim) {
            fail(path, "synthetic shape does not match the prior dimension");
        }
    } else if (source == "images") {
        spec.source = DatasetSpec::Source::images;
        if (obj.contains("count") || obj.contains("dimension") || obj.contains("height") ||
            obj.contains("width") || obj.contains("channels")) {
            fail(path, "image datasets take only a directory");
        }
        if (!obj.contains("directory")) fail(path + ".directory", "required");
        spec.directory = get_string(obj["directory"], path + ".directory");
        if (!std::filesystem::is_directory(spec.directory)) {
            fail(path + ".directory", "does not exist: " + spec.directory);
        }
    } else {
        fail(path + ".source", "unknown dataset source '" + source + "'");
    }
    return spec;
}

SweepSpec parse_sweep(const json& obj, const std::string& path) {
    expect_keys(obj, path, {"zeta", "step_count", "variants", "repeats"});
    SweepSpec spec;
    if (obj.contains("zeta")) {
        Eigen::VectorXd z = get_vector(obj["zeta"], path + ".zeta");
        spec.zetas.assign(z.begin(), z.end());
        for (double v : spec.zetas) {
            if (v < 0.0) fail(path + ".zeta", "step sizes must be >= 0");
        }
    }
    if (obj.contains("step_count")) {
        const json& arr = obj["step_count"];
        if (!arr.is_array() || arr.empty()) fail(path + ".step_count", "expected a non-empty array");
        spec.step_counts.clear();
        for (size_t i = 0; i < arr.size(); ++i) {
            int t = get_int(arr[i], path + ".step_count[" + std::to_string(i) + "]");
            if (t < 1) fail(path + ".step_count", "step counts must be >= 1");
            spec.step_counts.push_back(t);
        }
    }
    if (obj.contains("variants")) {
        const json& arr = obj["variants"];
        if (!arr.is_array() || arr.empty()) fail(path + ".variants", "expected a non-empty array");
        spec.variants.clear();
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string name = get_string(arr[i], path + ".variants[" + std::to_string(i) + "]");
            try {
                spec.variants.push_back(parse_variant(name));
            } catch (const ConfigError&) {
                fail(path + ".variants[" + std::to_string(i) + "]",
                     "unknown variant '" + name + "'");
            }
        }
    }
    if (obj.contains("repeats")) spec.repeats = get_int(obj["repeats"], path + ".repeats");
    if (spec.repeats < 1) fail(path + ".repeats", "must be >= 1");
    return spec;
}

json covariance_json(const Covariance& cov) {
    json j;
    if (cov.is_diagonal()) {
        j["diagonal"] = std::vector<double>(cov.diag().begin(), cov.diag().end());
    } else {
        std::vector<std::vector<double>> rows;
        for (Eigen::Index i = 0; i < cov.dim(); ++i) {
            rows.emplace_back(cov.matrix().row(i).begin(), cov.matrix().row(i).end());
        }
        j["dense"] = rows;
    }
    return j;
}

}  // namespace

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::vanilla: return "vanilla";
        case Variant::dps: return "dps";
        case Variant::mcg: return "mcg";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    if (name == "vanilla") return Variant::vanilla;
    if (name == "dps") return Variant::dps;
    if (name == "mcg") return Variant::mcg;
    throw ConfigError("unknown variant '" + name + "'");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }

    expect_keys(root, "", {"seed", "output_dir", "workers", "schedule", "prior",
                           "operator", "noise_sigma", "dataset", "sweep",
                           "conditioning", "sample", "verify", "evaluate"});

    ExperimentConfig cfg;
    if (root.contains("seed")) {
        if (!root["seed"].is_number_integer()) fail("seed", "expected an integer");
        cfg.seed = root["seed"].get<std::uint64_t>();
    }
    if (root.contains("output_dir")) cfg.output_dir = get_string(root["output_dir"], "output_dir");
    if (root.contains("workers")) cfg.workers = get_int(root["workers"], "workers");
    if (cfg.workers < 1) fail("workers", "must be >= 1");

    if (root.contains("schedule")) {
        expect_keys(root["schedule"], "schedule", {"beta_start", "beta_end"});
        if (root["schedule"].contains("beta_start")) {
            cfg.schedule.beta_start = get_number(root["schedule"]["beta_start"], "schedule.beta_start");
        }
        if (root["schedule"].contains("beta_end")) {
            cfg.schedule.beta_end = get_number(root["schedule"]["beta_end"], "schedule.beta_end");
        }
        if (!(cfg.schedule.beta_start > 0.0 && cfg.schedule.beta_end < 1.0 &&
              cfg.schedule.beta_start <= cfg.schedule.beta_end)) {
            fail("schedule", "requires 0 < beta_start <= beta_end < 1");
        }
    }

    if (!root.contains("prior")) fail("prior", "required");
    cfg.prior = parse_prior(root["prior"], "prior");
    Eigen::Index prior_dim = cfg.prior.components.front().mean.size();

    if (root.contains("operator")) cfg.op = parse_operator(root["operator"], "operator");

    if (root.contains("noise_sigma")) {
        cfg.noise_sigma = get_number(root["noise_sigma"], "noise_sigma");
        if (cfg.noise_sigma < 0.0) fail("noise_sigma", "must be >= 0");
    }

    if (root.contains("dataset")) {
        cfg.dataset = parse_dataset(root["dataset"], "dataset", prior_dim);
    } else {
        cfg.dataset.shape = TensorShape{1, 1, static_cast<int>(prior_dim)};
    }

    if (root.contains("sweep")) cfg.sweep = parse_sweep(root["sweep"], "sweep");

    if (root.contains("conditioning")) {
        expect_keys(root["conditioning"], "conditioning", {"step_size_mode", "mcg_projection"});
        if (root["conditioning"].contains("step_size_mode")) {
            std::string mode = get_string(root["conditioning"]["step_size_mode"],
                                          "conditioning.step_size_mode");
            if (mode == "constant") {
                cfg.step_size_mode = StepSizeMode::constant;
            } else if (mode == "residual_normalized") {
                cfg.step_size_mode = StepSizeMode::residual_normalized;
            } else {
                fail("conditioning.step_size_mode", "expected constant or residual_normalized");
            }
        }
        if (root["conditioning"].contains("mcg_projection")) {
            cfg.mcg_projection =
                get_bool(root["conditioning"]["mcg_projection"], "conditioning.mcg_projection");
        }
    }

    if (root.contains("sample")) {
        expect_keys(root["sample"], "sample", {"variant", "zeta", "step_count", "item"});
        const json& s = root["sample"];
        if (s.contains("variant")) {
            cfg.sample.variant = parse_variant(get_string(s["variant"], "sample.variant"));
        }
        if (s.contains("zeta")) cfg.sample.zeta = get_number(s["zeta"], "sample.zeta");
        if (s.contains("step_count")) cfg.sample.step_count = get_int(s["step_count"], "sample.step_count");
        if (s.contains("item")) cfg.sample.item = get_int(s["item"], "sample.item");
        if (cfg.sample.zeta < 0.0) fail("sample.zeta", "must be >= 0");
        if (cfg.sample.step_count < 1) fail("sample.step_count", "must be >= 1");
        if (cfg.sample.item < 0) fail("sample.item", "must be >= 0");
    }

    if (root.contains("verify")) {
        expect_keys(root["verify"], "verify",
                    {"variant", "zeta", "step_count", "chains", "slack", "measurement"});
        const json& v = root["verify"];
        if (v.contains("variant")) {
            cfg.verify.variant = parse_variant(get_string(v["variant"], "verify.variant"));
        }
        if (v.contains("zeta")) cfg.verify.zeta = get_number(v["zeta"], "verify.zeta");
        if (v.contains("step_count")) cfg.verify.step_count = get_int(v["step_count"], "verify.step_count");
        if (v.contains("chains")) cfg.verify.chains = get_int(v["chains"], "verify.chains");
        if (v.contains("slack")) cfg.verify.slack = get_number(v["slack"], "verify.slack");
        if (v.contains("measurement")) {
            cfg.verify.measurement = get_vector(v["measurement"], "verify.measurement");
        }
        if (cfg.verify.zeta < 0.0) fail("verify.zeta", "must be >= 0");
        if (cfg.verify.step_count < 1) fail("verify.step_count", "must be >= 1");
        if (cfg.verify.chains < 2) fail("verify.chains", "must be >= 2");
        if (cfg.verify.slack <= 0.0) fail("verify.slack", "must be > 0");
    }

    if (root.contains("evaluate")) {
        expect_keys(root["evaluate"], "evaluate", {"reconstructions", "references"});
        const json& e = root["evaluate"];
        if (!e.contains("reconstructions") || !e.contains("references")) {
            fail("evaluate", "needs reconstructions and references directories");
        }
        EvaluateSpec spec;
        spec.reconstructions = get_string(e["reconstructions"], "evaluate.reconstructions");
        spec.references = get_string(e["references"], "evaluate.references");
        for (const auto& dir : {spec.reconstructions, spec.references}) {
            if (!std::filesystem::is_directory(dir)) {
                fail("evaluate", "directory does not exist: " + dir);
            }
        }
        cfg.evaluate = std::move(spec);
    }

    return cfg;
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
    json root;
    root["seed"] = cfg.seed;
    root["output_dir"] = cfg.output_dir;
    root["workers"] = cfg.workers;
    root["schedule"] = {{"beta_start", cfg.schedule.beta_start},
                        {"beta_end", cfg.schedule.beta_end}};

    json prior;
    if (cfg.prior.kind == PriorSpec::Kind::gaussian) {
        const auto& c = cfg.prior.components.front();
        prior["type"] = "gaussian";
        prior["mean"] = std::vector<double>(c.mean.begin(), c.mean.end());
        prior["covariance"] = covariance_json(c.covariance);
    } else {
        prior["type"] = "gaussian_mixture";
        prior["dimension"] = cfg.prior.components.front().mean.size();
        json comps = json::array();
        for (const auto& c : cfg.prior.components) {
            json jc;
            jc["weight"] = c.weight;
            jc["mean"] = std::vector<double>(c.mean.begin(), c.mean.end());
            jc["covariance"] = covariance_json(c.covariance);
            comps.push_back(jc);
        }
        prior["components"] = comps;
    }
    root["prior"] = prior;

    json op;
    switch (cfg.op.kind) {
        case OperatorSpec::Kind::identity:
            op["kind"] = "identity";
            break;
        case OperatorSpec::Kind::downsample_avg:
            op["kind"] = "downsample_avg";
            op["factor"] = cfg.op.factor;
            break;
        case OperatorSpec::Kind::gaussian_blur:
            op["kind"] = "gaussian_blur";
            op["radius"] = cfg.op.radius;
            op["sigma"] = cfg.op.sigma;
            break;
    }
    root["operator"] = op;
    root["noise_sigma"] = cfg.noise_sigma;

    json dataset;
    if (cfg.dataset.source == DatasetSpec::Source::synthetic) {
        dataset["source"] = "synthetic";
        dataset["count"] = cfg.dataset.count;
        dataset["height"] = cfg.dataset.shape.height;
        dataset["width"] = cfg.dataset.shape.width;
        dataset["channels"] = cfg.dataset.shape.channels;
    } else {
        dataset["source"] = "images";
        dataset["directory"] = cfg.dataset.directory;
    }
    root["dataset"] = dataset;

    json sweep;
    sweep["zeta"] = cfg.sweep.zetas;
    sweep["step_count"] = cfg.sweep.step_counts;
    std::vector<std::string> names;
    for (Variant v : cfg.sweep.variants) names.push_back(variant_name(v));
    sweep["variants"] = names;
    sweep["repeats"] = cfg.sweep.repeats;
    root["sweep"] = sweep;

    root["conditioning"] = {
        {"step_size_mode", cfg.step_size_mode == StepSizeMode::constant
                               ? "constant"
                               : "residual_normalized"},
        {"mcg_projection", cfg.mcg_projection}};

    root["sample"] = {{"variant", variant_name(cfg.sample.variant)},
                      {"zeta", cfg.sample.zeta},
                      {"step_count", cfg.sample.step_count},
                      {"item", cfg.sample.item}};

    json verify = {{"variant", variant_name(cfg.verify.variant)},
                   {"zeta", cfg.verify.zeta},
                   {"step_count", cfg.verify.step_count},
                   {"chains", cfg.verify.chains},
                   {"slack", cfg.verify.slack}};
    if (cfg.verify.measurement) {
        verify["measurement"] = std::vector<double>(cfg.verify.measurement->begin(),
                                                    cfg.verify.measurement->end());
    }
    root["verify"] = verify;

    if (cfg.evaluate) {
        root["evaluate"] = {{"reconstructions", cfg.evaluate->reconstructions},
                            {"references", cfg.evaluate->references}};
    }

    return root.dump(2) + "\n";
}

std::unique_ptr<ScoreModel> make_prior(const PriorSpec& spec) {
    if (spec.kind == PriorSpec::Kind::gaussian) {
        const auto& c = spec.components.front();
        return std::make_unique<GaussianPrior>(c.mean, c.covariance);
    }
    return std::make_unique<GaussianMixturePrior>(spec.components);
}

std::unique_ptr<LinearOperator> make_operator(const OperatorSpec& spec,
                                              TensorShape input) {
    switch (spec.kind) {
        case OperatorSpec::Kind::identity:
            return std::make_unique<IdentityOperator>(input);
        case OperatorSpec::Kind::downsample_avg:
            return std::make_unique<DownsampleAvg>(input, spec.factor);
        case OperatorSpec::Kind::gaussian_blur:
            return std::make_unique<GaussianBlur>(input, spec.radius, spec.sigma);
    }
    throw ConfigError("unreachable operator kind");
}

}  // namespace dps
