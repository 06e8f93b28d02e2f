#pragma once

#include "trafficgp/config.hpp"

namespace trafficgp {

// Each command writes its artifacts plus a manifest.json (config digest,
// seeds, output list) into the configured output directory.
void cmd_ingest(const RunConfig &config);
void cmd_fit(const RunConfig &config);
void cmd_predict(const RunConfig &config);
void cmd_sweep(const RunConfig &config);
void cmd_synth(const RunConfig &config);

} // namespace trafficgp
