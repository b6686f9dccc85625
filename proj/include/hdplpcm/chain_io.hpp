#pragma once

#include <iosfwd>
#include <string>

#include "hdplpcm/gibbs.hpp"

namespace hdplpcm {

enum class ChainFormat { binary, jsonl };

// Chain persistence: a header record (config echo, seed, sizes, format
// version) followed by per-sample records. The binary layout is
// little-endian doubles/int32 in a fixed field order; the jsonl layout is
// one JSON object per line with the header first. Both round-trip exactly.
void save_chain(const Chain& chain, std::ostream& out, ChainFormat format);
void save_chain_file(const Chain& chain, const std::string& path,
                     ChainFormat format);
Chain load_chain(std::istream& in);
Chain load_chain_file(const std::string& path);

void save_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// run_chain variant that honors config.checkpoint_every/checkpoint_path.
Chain run_chain_checkpointed(const DynamicNetwork& net,
                             const SamplerConfig& config,
                             const std::atomic<bool>* stop = nullptr);

}  // namespace hdplpcm
