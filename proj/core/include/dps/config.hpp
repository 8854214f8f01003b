#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dps/image.hpp"
#include "dps/prior.hpp"
#include "dps/sampler.hpp"
#include "dps/schedule.hpp"

namespace dps {

struct PriorSpec {
    enum class Kind { gaussian, gaussian_mixture };
    Kind kind = Kind::gaussian;
    std::vector<MixtureComponent> components;  // exactly one for gaussian
};

struct OperatorSpec {
    enum class Kind { identity, downsample_avg, gaussian_blur };
    Kind kind = Kind::identity;
    int factor = 4;     // downsample_avg
    int radius = 2;     // gaussian_blur
    double sigma = 1.0; // gaussian_blur
};

struct DatasetSpec {
    enum class Source { synthetic, images };
    Source source = Source::synthetic;
    int count = 16;          // synthetic
    TensorShape shape;       // synthetic x0 shape
    std::string directory;   // images
};

struct SweepSpec {
    std::vector<double> zetas = {1.0};
    std::vector<int> step_counts = {1000};
    std::vector<Variant> variants = {Variant::dps};
    int repeats = 1;
};

struct SampleSpec {
    Variant variant = Variant::dps;
    double zeta = 1.0;
    int step_count = 1000;
    int item = 0;
};

struct VerifySpec {
    Variant variant = Variant::dps;
    double zeta = 1.0;
    int step_count = 1000;
    int chains = 2000;
    double slack = 1.0;  // widens the 3-sigma bands
    std::optional<Eigen::VectorXd> measurement;
};

struct EvaluateSpec {
    std::string reconstructions;
    std::string references;
};

/// Fully resolved experiment description. load_config fills every default;
/// the echo written next to outputs round-trips through load_config.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    int workers = 1;
    ScheduleSpec schedule;
    PriorSpec prior;
    OperatorSpec op;
    double noise_sigma = 0.05;
    DatasetSpec dataset;
    SweepSpec sweep;
    StepSizeMode step_size_mode = StepSizeMode::residual_normalized;
    bool mcg_projection = true;
    SampleSpec sample;
    VerifySpec verify;
    std::optional<EvaluateSpec> evaluate;
};

/// Strict loader: unknown keys are fatal and every violation names the key
/// path. Referenced directories must exist at load time.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolved-config echo as canonical JSON text.
std::string resolved_config_json(const ExperimentConfig& config);

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

/// Prior factory for a validated spec.
std::unique_ptr<ScoreModel> make_prior(const PriorSpec& spec);

/// Operator factory; the input shape comes from the dataset.
std::unique_ptr<LinearOperator> make_operator(const OperatorSpec& spec,
                                              TensorShape input);

}  // namespace dps
