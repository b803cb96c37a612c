// Copyright 2026 The evonas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// evonas command-line entry point. Argument parsing only; every command is a
// call into evonas/commands.hpp.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "evonas/evonas.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary search over variable-length CNN architectures"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> resume;
  std::optional<std::size_t> generations;
  std::optional<std::size_t> population;
  std::optional<std::string> output;
  auto* search = app.add_subcommand("search", "Run the evolutionary search");
  search->add_option("--config", config_path, "JSON run configuration")->required();
  search->add_option("--seed", seed, "Override the random seed");
  search->add_option("--resume", resume, "Resume from a checkpoint file");
  search->add_option("--generations", generations, "Override the generation count");
  search->add_option("--population", population, "Override the population size");
  search->add_option("--output", output, "Override the output directory");

  std::string genome_text;
  std::string input_shape = "3x32x32";
  int classes = 7;
  int pool_stride = 2;
  std::string format = "dot";
  auto* decode = app.add_subcommand("decode", "Decode a genome and print its graph");
  decode->add_option("--genome", genome_text, "Genome text, e.g. S64.128|Pmax")->required();
  decode->add_option("--input-shape", input_shape, "Input shape CxHxW")->capture_default_str();
  decode->add_option("--classes", classes, "Number of output classes")->capture_default_str();
  decode->add_option("--pool-stride", pool_stride, "Pooling stride")->capture_default_str();
  decode->add_option("--format", format, "dot or json")
      ->check(CLI::IsMember({"dot", "json"}))
      ->capture_default_str();

  std::string cache_path;
  auto* stats = app.add_subcommand("cache-stats", "Summarize a fitness cache file");
  stats->add_option("--cache", cache_path, "Cache file")->required();

  std::string eval_config;
  std::string eval_genome;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate one genome through the cache");
  evaluate->add_option("--config", eval_config, "JSON run configuration")->required();
  evaluate->add_option("--genome", eval_genome, "Genome text")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (search->parsed()) {
      evonas::SearchOverrides overrides;
      overrides.seed = seed;
      if (resume) overrides.resume = *resume;
      overrides.generations = generations;
      overrides.population_size = population;
      if (output) overrides.output_path = *output;
      return evonas::cmd_search(evonas::load_config(config_path), overrides, std::cout,
                                std::cerr);
    }
    if (decode->parsed()) {
      return evonas::cmd_decode(genome_text, evonas::parse_shape(input_shape), classes,
                                format == "json" ? evonas::RenderFormat::json
                                                 : evonas::RenderFormat::dot,
                                pool_stride, std::cout, std::cerr);
    }
    if (stats->parsed()) return evonas::cmd_cache_stats(cache_path, std::cout, std::cerr);
    if (evaluate->parsed()) {
      return evonas::cmd_evaluate(evonas::load_config(eval_config), eval_genome, std::cout,
                                  std::cerr);
    }
  } catch (const evonas::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return evonas::kExitUsage;
  }
  return evonas::kExitUsage;
}
