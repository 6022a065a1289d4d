#include "crossaug/layers.h"

namespace crossaug {

LstmState lstm_cell(ad::Var input, LstmState prev, ad::Var w, ad::Var b, std::size_t hidden) {
  ad::Var z = ad::add_row(ad::matmul(ad::concat_cols({input, prev.h}), w), b);
  ad::Var i = ad::sigmoid(ad::slice_cols(z, 0, hidden));
  ad::Var f = ad::sigmoid(ad::slice_cols(z, hidden, hidden));
  ad::Var g = ad::tanh(ad::slice_cols(z, 2 * hidden, hidden));
  ad::Var o = ad::sigmoid(ad::slice_cols(z, 3 * hidden, hidden));
  ad::Var c = ad::add(ad::mul(i, g), ad::mul(f, prev.c));
  return {ad::mul(o, ad::tanh(c)), c};
}

}  // namespace crossaug
