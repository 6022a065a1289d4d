#ifndef CROSSAUG_LAYERS_H_
#define CROSSAUG_LAYERS_H_

#include <cstddef>

#include "crossaug/autodiff.h"

namespace crossaug {

struct LstmState {
  ad::Var h, c;
};

// One LSTM step. w is (input + hidden) x 4*hidden, b is 1 x 4*hidden, gates
// packed in the order input, forget, candidate, output.
LstmState lstm_cell(ad::Var input, LstmState prev, ad::Var w, ad::Var b, std::size_t hidden);

}  // namespace crossaug

#endif  // CROSSAUG_LAYERS_H_
