#pragma once

#include <string>
#include <vector>

#include "relclass/config.hpp"
#include "relclass/data_io.hpp"
#include "relclass/encoder.hpp"
#include "relclass/features.hpp"
#include "relclass/relation_head.hpp"
#include "relclass/rng.hpp"
#include "relclass/tape.hpp"

namespace relclass {

// Every tensor of the classifier. Copyable; a copy is a full snapshot.
// The only frozen block is the pre-trained table.
struct ModelParams {
  HyperParams hp;
  LabelSchema schema;
  FeatureParams feats;
  LstmParams tok_fwd, tok_bwd;
  ProjectionParams proj;
  OutputParams out;
  ContextFlags contexts;

  int token_dim() const { return feats.token_dim(); }
  int penultimate_dim() const;
};

// Receives parameters in the fixed model order (the order of
// initialization, checkpoint layout, and gradcheck reporting).
struct ParamVisitor {
  virtual ~ParamVisitor() = default;
  virtual void mat(MatParam& p) = 0;
  virtual void vec(VecParam& p) = 0;
};

// Tuned tensors only, fixed order: ran/char/pos/wnh tables, char fwd/bwd
// LSTMs, token fwd/bwd LSTMs, projection, output. Disabled channels are
// still visited so checkpoints stay structurally stable under ablation.
void visit_tuned(ModelParams& m, ParamVisitor& v);

// Frozen pre table first, then the tuned order.
void visit_all(ModelParams& m, ParamVisitor& v);

// Allocates all parameter tensors for the given config/vocabs; entries zero.
ModelParams build_model(const RunConfig& cfg, LookupTable pre_table,
                        BuiltVocabs vocabs);

// Fills every tuned tensor uniform(init_lo, init_hi) in visit_tuned order,
// row-major within each tensor. One Rng drives the whole model.
void init_params(ModelParams& m, Rng& rng);

// Forward pass to the per-example cross-entropy (data term only; L2 lives
// in the optimizer update). Tracks every tuned parameter on the tape.
Value build_loss(Tape& tape, ModelParams& m, const RelationInstance& inst,
                 int gold_index);

struct Prediction {
  int index = 0;
  std::string label;
  Vec probs;
};

Prediction predict(ModelParams& m, const RelationInstance& inst);

}  // namespace relclass
