#pragma once

#include <filesystem>
#include <iosfwd>

#include "evfuse/classifier.hpp"

namespace evfuse {

// Text checkpoint. Reals are written as hex floats so a save/load cycle is
// bit-exact:
//
//   evfuse-checkpoint 1
//   view_id <id>
//   seed <u64>
//   activation <tanh|softplus|linear>
//   layer_dims <d0> <d1> ...
//   layer <l> weights <rows> <cols>   followed by rows lines of cols values
//   layer <l> bias <n>                followed by one line of n values
void save_checkpoint(const EvidentialClassifier& model, std::ostream& out);
EvidentialClassifier load_checkpoint(std::istream& in);

void save_checkpoint(const EvidentialClassifier& model, const std::filesystem::path& path);
EvidentialClassifier load_checkpoint(const std::filesystem::path& path);

}  // namespace evfuse
