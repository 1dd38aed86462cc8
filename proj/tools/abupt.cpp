#include "abupt/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

struct Flags {
  std::string config, dataset, output, checkpoint, split, precision, mode, head;
  std::uint64_t seed = 0;
  int threads = 1;
  abupt::Index chunk_size = 0;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON configuration file; flags override its values");
  sub->add_option("--dataset", f.dataset, "Dataset directory");
  sub->add_option("--output", f.output, "Output directory");
  sub->add_option("--checkpoint", f.checkpoint, "Checkpoint or run directory");
  sub->add_option("--split", f.split, "Dataset split");
  sub->add_option("--seed", f.seed, "Random seed");
  sub->add_option("--threads", f.threads, "Worker threads for decoding")->check(CLI::PositiveNumber);
  sub->add_option("--precision", f.precision, "Activation precision")->check(CLI::IsMember({"f32", "f16-mixed"}));
  sub->add_option("--mode", f.mode, "Anchor source")->check(CLI::IsMember({"cfd-mesh", "cad-grid"}));
  sub->add_option("--head", f.head, "Vorticity head")->check(CLI::IsMember({"direct", "divfree"}));
  sub->add_option("--chunk-size", f.chunk_size, "Decode chunk size")->check(CLI::PositiveNumber);
}

// Config file first, then any flag given on the command line.
abupt::cli::RunConfig resolve(const CLI::App& sub, const Flags& f) {
  using namespace abupt;
  cli::RunConfig cfg;
  cfg.command = sub.get_name();
  if (!f.config.empty()) cli::load_config_file(f.config, cfg);
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (given("--dataset")) cfg.dataset = f.dataset;
  if (given("--output")) cfg.output = f.output;
  if (given("--checkpoint")) cfg.checkpoint = f.checkpoint;
  if (given("--split")) cfg.split = f.split;
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--threads")) cfg.threads = f.threads;
  if (given("--precision")) cfg.precision = f.precision;
  if (given("--mode")) cfg.mode = data::points_mode_from_string(f.mode);
  if (given("--head")) cfg.head = eval::head_mode_from_string(f.head);
  if (given("--chunk-size")) cfg.chunk_size = f.chunk_size;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AB-UPT neural surrogate for 3D flow fields"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"generate", "Write a synthetic dataset"},
      {"train", "Train a model from scratch"},
      {"finetune-divfree", "Divergence-free finetuning from a first-stage checkpoint"},
      {"predict", "Per-point field predictions"},
      {"coeffs", "Drag and lift coefficients"},
      {"eval", "Full-mesh error metrics"},
      {"bench", "Runtime and memory scaling"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? abupt::cli::kOk : abupt::cli::kValidation;
  }
  const CLI::App* sub = app.get_subcommands().front();
  return abupt::cli::guarded([&] { abupt::cli::run(resolve(*sub, flags)); });
}
