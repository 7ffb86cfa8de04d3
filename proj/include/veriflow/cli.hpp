#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "veriflow/adapters.hpp"
#include "veriflow/agents.hpp"
#include "veriflow/media.hpp"

namespace veriflow::cli {

/// Resolved settings. Precedence: command-line flag > environment > config file > default.
struct RunConfig {
    std::optional<std::string> gallery_path;
    std::optional<std::string> fixtures_path;
    IngestConfig ingest;
    AgentConfig agent;
    std::size_t dimension = kDefaultEmbeddingDimension;
    std::size_t embedding_cap = kDefaultEmbeddingCap;
    std::optional<double> test_fraction;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    bool fail_fast = false;
    AdapterConfig llm;
    AdapterConfig search;
    AdapterConfig media;
};

/// Entry point behind the `veriflow` binary. `args` includes the program name.
/// JSON results go to `out`, diagnostics to `err`. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace veriflow::cli
