#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>

#include "fedhin/federation.hpp"

namespace fedhin {

// Binary layouts (little-endian, IEEE-754 doubles):
//   header   : 8-byte magic
//   manifest : u32 count, then per tensor u32 name length, name, u64 rows,
//              u64 cols
//   payload  : u64 count, then count doubles
// Update   = "FHINUPD1" u32 client_id u64 version manifest payload
// Decision = "FHINDSP1" u8 mode u32 target manifest payload
// Checkpoint (shared tensors) = "FHINCKP1" manifest payload
// Preferences                 = "FHINPRF1" manifest payload

std::string encode_update(const ClientUpdate& update,
                          const ShapeManifest& manifest);
std::pair<ClientUpdate, ShapeManifest> decode_update(std::string_view bytes);

std::string encode_decision(const DispatchDecision& decision,
                            const ShapeManifest& manifest);
std::pair<DispatchDecision, ShapeManifest> decode_decision(
    std::string_view bytes);

void save_checkpoint(std::ostream& out, const ModelParams& params);
/// Overwrites the shared tensors of `params`. Throws shape error when the
/// stored manifest differs from params.shared_manifest(), io error on a
/// truncated or foreign stream.
void load_checkpoint(std::istream& in, ModelParams& params);

void save_preferences(std::ostream& out, const ModelParams& params);
void load_preferences(std::istream& in, ModelParams& params);

}  // namespace fedhin
