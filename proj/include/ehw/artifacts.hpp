#ifndef EHW_ARTIFACTS_HPP
#define EHW_ARTIFACTS_HPP

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ehw/exec.hpp"
#include "ehw/explorer.hpp"
#include "ehw/intermittent.hpp"
#include "ehw/model.hpp"
#include "ehw/perfmodel.hpp"
#include "ehw/scheduler.hpp"

namespace ehw {

using nlohmann::json;

// to_json: canonical emission. from_json: strict schema validation — unknown
// keys are rejected and errors carry the JSON path of the offending value.

json to_json(const QTensor& t);
QTensor tensor_from_json(const json& j);

json to_json(const NetworkSpec& net);
NetworkSpec network_from_json(const json& j);

json to_json(const ExecutionDesign& d);
ExecutionDesign design_from_json(const json& j);

json to_json(const PowerParams& p);
PowerParams power_from_json(const json& j);

json to_json(const CostParams& c);
CostParams costs_from_json(const json& j);

json to_json(const FaultTrace& f);
FaultTrace faults_from_json(const json& j);

json to_json(const TaskSpec& t);
TaskSpec task_from_json(const json& j);
json to_json(const TaskSet& ts);
TaskSet taskset_from_json(const json& j);

json to_json(const DesignCaps& c);
DesignCaps caps_from_json(const json& j);

json to_json(const SearchSpace& s);
SearchSpace space_from_json(const json& j);

json to_json(const RewardParams& r);
RewardParams reward_params_from_json(const json& j);

json to_json(const EvolveParams& e);
EvolveParams evolve_params_from_json(const json& j);

// Results (emit plus reload of the parts a pipeline consumes again).
json to_json(const PerfEstimate& e);
json to_json(const SimResult& r);
json to_json(const TileStats& s);
json to_json(const SchedVerdict& v);
json to_json(const ScheduleTrace& t);
json to_json(const ArchConfig& a);
ArchConfig arch_from_json(const json& j);
json to_json(const SearchResult& r);
SearchResult search_result_from_json(const json& j);

// File helpers. save_json writes a trailing newline and 2-space indentation;
// output is byte-deterministic for a given value.
json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const json& j);

// C header with one int16 array per weighted layer plus structure and design
// macro tables. Deterministic byte-for-byte.
std::string dump_header(const NetworkSpec& net, const ExecutionDesign& design);

// Per-layer CSV weight export: "layer<i>.csv" with a shape comment line and
// one row per output channel. Pool layers produce no file.
void dump_csv(const NetworkSpec& net, const std::filesystem::path& dir);

struct CsvLayerWeights {
    int layer = 0;
    int c_out = 0, c_in = 0, kh = 0, kw = 0;
    QTensor weights;  // same container layout NetworkSpec uses
};

// Reads every layer<i>.csv in `dir`. load(dump(x)) reproduces x's weight
// tensors bit-exactly. Parse errors carry file and line.
std::vector<CsvLayerWeights> load_csv(const std::filesystem::path& dir);

// Replaces the weight tensors of a structural copy of `net` with CSV contents.
NetworkSpec apply_csv_weights(const NetworkSpec& net,
                              const std::vector<CsvLayerWeights>& loaded);

// Raw little-endian NVM bytes: snapshot slots then per-layer output regions.
std::vector<std::uint8_t> nvm_image_bytes(const NvmImage& nvm);

} // namespace ehw

#endif
