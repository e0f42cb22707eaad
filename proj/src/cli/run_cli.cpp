// Copyright 2026 The DEPAS Authors.
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

#include <CLI11.hpp>

#include <ostream>

#include "depas/cli.hpp"
#include "depas/errors.hpp"

namespace depas::cli {

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic tissue mask generation: preprocess, train, generate, eval."};
  app.footer("\n" + config_help());
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "TOML configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "overrides run.seed");
  app.add_option("--out-dir", out_dir, "overrides run.out_dir");
  app.add_option("--set", overrides, "section.key=value override, repeatable; applied after the file");

  auto* preprocess = app.add_subcommand("preprocess", "build label masks, filter, split and write the manifest");
  std::optional<std::string> input_dir;
  preprocess->add_option("--input-dir", input_dir, "RGB image directory (disables toy mode)");

  auto* train = app.add_subcommand("train", "train on the manifest's train split");
  bool resume = false;
  train->add_flag("--resume", resume, "continue from the latest checkpoint in <out_dir>/train");

  auto* generate = app.add_subcommand("generate", "sample discrete masks from a checkpoint");
  std::optional<std::string> checkpoint;
  std::optional<std::size_t> count;
  generate->add_option("--checkpoint", checkpoint, "overrides generate.checkpoint");
  generate->add_option("--count", count, "overrides generate.count");

  auto* eval = app.add_subcommand("eval", "compare real and synthetic mask directories");
  std::optional<std::string> real_dir;
  std::optional<std::string> synthetic_dir;
  eval->add_option("--real", real_dir, "overrides eval.real_dir");
  eval->add_option("--synthetic", synthetic_dir, "overrides eval.synthetic_dir");

  for (auto* sub : {preprocess, train, generate, eval}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    for (const auto& o : overrides) apply_override(config, o);
    if (seed) config.seed = *seed;
    if (out_dir) config.out_dir = *out_dir;
    if (input_dir) {
      config.data.input_dir = *input_dir;
      config.data.toy = false;
    }
    if (checkpoint) config.generate.checkpoint = *checkpoint;
    if (count) config.generate.count = *count;
    if (real_dir) config.eval.real_dir = *real_dir;
    if (synthetic_dir) config.eval.synthetic_dir = *synthetic_dir;
    config.finalize();
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (preprocess->parsed()) {
      (void)cmd_preprocess(config, out);
    } else if (train->parsed()) {
      (void)cmd_train(config, resume, out);
    } else if (generate->parsed()) {
      (void)cmd_generate(config, out);
    } else {
      (void)cmd_eval(config, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace depas::cli
