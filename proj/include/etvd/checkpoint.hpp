#pragma once

#include <string>

#include "etvd/network.hpp"

namespace etvd {

// Versioned binary serialization of the full network state. Layout:
//   magic "ETVD"
//   format version           u32 LE
//   NetworkConfig            blocks u32, channels u32, in_channels u32,
//                            alpha f64, seed u64  (all LE)
//   record count             u32 LE
//   per record               name length u32, name bytes, dim count u32,
//                            dims u32 each, payload f32 LE per element
// Records cover learnable parameters and BN running statistics, so a
// round-trip reproduces forward outputs bit for bit.
void save_checkpoint(const std::string& path, const ResidualDenoiser<float>& net);
ResidualDenoiser<float> load_checkpoint(const std::string& path);

}  // namespace etvd
