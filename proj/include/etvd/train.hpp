#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "etvd/data.hpp"
#include "etvd/loss.hpp"
#include "etvd/network.hpp"
#include "etvd/optim.hpp"

namespace etvd {

struct TrainConfig {
    int epochs = 50;
    int batch_size = 128;
    SgdConfig sgd;
    TvL2Config loss;
    uint64_t seed = 1;
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr = 0.0;
    double beta = 0.0;
    double seconds = 0.0;
    int steps = 0;
};

struct TrainResult {
    std::vector<EpochLog> epochs;
};

using TrainLogger = std::function<void(const std::string&)>;

// SGD training loop over fixed noisy-clean pairs. Writes
// checkpoint-epochNNN.etvd after every epoch (and checkpoint-final.etvd at
// the end) when checkpoint_dir is nonempty. Aborts with a diagnostic if the
// loss goes non-finite. Fully deterministic for a given config + seed.
TrainResult train_model(ResidualDenoiser<float>& net, const PatchDataset& data,
                        const TrainConfig& cfg, const std::string& checkpoint_dir,
                        const TrainLogger& log, int start_epoch = 0);

}  // namespace etvd
