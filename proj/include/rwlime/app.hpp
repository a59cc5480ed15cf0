#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rwlime/attribution.hpp"
#include "rwlime/datasets.hpp"
#include "rwlime/http_backend.hpp"

namespace rwlime {

/// Fully resolved run settings. Built from a flat dotted-key JSON config with
/// command-line overrides applied on top.
struct RunConfig {
  std::string dataset_path;
  DatasetKind dataset_kind = DatasetKind::Synthetic;
  std::size_t require_doc_count = 10;

  AttributionOptions attribution;
  BackendConfig backend;
  std::string backend_fixture;
  /// "none", "echo" or "http".
  std::string generation = "none";

  std::string out_dir = "out";
  std::size_t parallel = 1;

  std::string attributions_path;
  std::string protocol;

  /// Effective flat config, serialized into output metadata.
  std::map<std::string, std::string> flat;
};

/// Resolves a flat key/value map into a RunConfig; throws ConfigError.
RunConfig resolve_config(const std::map<std::string, std::string>& flat);

/// Entry point shared by the executable and the tests. Returns the process
/// exit code: 0 success, 1 runtime failure, 2 config error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rwlime
