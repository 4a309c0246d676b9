#include "npnf/tape.hpp"

namespace npnf {

void Tape::backward(Var root) {
  adj_.assign(nodes_.size(), 0.0);
  adj_[root.idx] = 1.0;
  for (uint32_t i = root.idx + 1; i-- > 0;) {
    double w = adj_[i];
    if (w == 0.0) continue;
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::kLeaf:
      case Op::kConst:
        break;
      case Op::kCopy:
        adj_[n.a] += w;
        break;
      case Op::kAdd:
        adj_[n.a] += w;
        adj_[n.b] += w;
        break;
      case Op::kSub:
        adj_[n.a] += w;
        adj_[n.b] -= w;
        break;
      case Op::kMul:
        adj_[n.a] += w * val_[n.b];
        adj_[n.b] += w * val_[n.a];
        break;
      case Op::kDiv:
        adj_[n.a] += w / val_[n.b];
        adj_[n.b] -= w * val_[i] / val_[n.b];
        break;
      case Op::kNeg:
        adj_[n.a] -= w;
        break;
      case Op::kAddC:
        adj_[n.a] += w;
        break;
      case Op::kMulC:
        adj_[n.a] += w * n.aux;
        break;
      case Op::kRsubC:
        adj_[n.a] -= w;
        break;
      case Op::kRdivC:
        adj_[n.a] -= w * val_[i] / val_[n.a];
        break;
      case Op::kExp:
        adj_[n.a] += w * val_[i];
        break;
      case Op::kLog:
        adj_[n.a] += w / val_[n.a];
        break;
      case Op::kSqrt:
        adj_[n.a] += w * 0.5 / val_[i];
        break;
      case Op::kSin:
        adj_[n.a] += w * std::cos(val_[n.a]);
        break;
      case Op::kCos:
        adj_[n.a] -= w * std::sin(val_[n.a]);
        break;
      case Op::kSoftplus:
        adj_[n.a] += w * sigmoid_val(val_[n.a]);
        break;
      case Op::kPow:
        adj_[n.a] += w * n.aux * std::pow(val_[n.a], n.aux - 1.0);
        break;
      case Op::kMinS:
        adj_[val_[n.a] <= val_[n.b] ? n.a : n.b] += w;
        break;
      case Op::kMaxS:
        adj_[val_[n.a] >= val_[n.b] ? n.a : n.b] += w;
        break;
      case Op::kAbs:
        adj_[n.a] += val_[n.a] >= 0.0 ? w : -w;
        break;
      case Op::kSum:
        for (uint32_t k = 0; k < n.b; ++k) adj_[n.a + k] += w;
        break;
      case Op::kDot: {
        uint32_t len = uint32_t(n.aux);
        for (uint32_t k = 0; k < len; ++k) {
          adj_[n.a + k] += w * val_[n.b + k];
          adj_[n.b + k] += w * val_[n.a + k];
        }
        break;
      }
    }
  }
}

}  // namespace npnf
