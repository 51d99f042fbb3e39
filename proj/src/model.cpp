#include "irm/model.hpp"

#include "irm/checkpoint.hpp"
#include "irm/errors.hpp"

namespace irm {

namespace {
constexpr std::uint64_t kTextSalt = 0x7465787421ULL;
constexpr std::uint64_t kInstructionSalt = 0x696e737472ULL;
}  // namespace

void ModelConfig::validate() const {
  if (d_model < 1 || d_visual < 1 || n_queries < 1 || tokens_per_frame < 1 || frame_count < 1) {
    throw ValidationError("model sizes must be positive");
  }
  if (head_count < 1 || d_model % head_count != 0) {
    throw ValidationError("d_model must be divisible by head_count");
  }
  if (visual_head_count < 1 || d_visual % visual_head_count != 0) {
    throw ValidationError("d_visual must be divisible by visual_head_count");
  }
}

IrmModel::IrmModel(const ModelConfig& cfg)
    : config((cfg.validate(), cfg)),
      aim(cfg.d_model, cfg.head_count),
      vem(cfg.n_queries, cfg.d_visual, cfg.d_model, cfg.visual_head_count, cfg.head_count),
      text_embedder(cfg.d_model, kTextSalt),
      instruction_embedder(cfg.d_visual, kInstructionSalt) {}

IrmModel IrmModel::create(const ModelConfig& cfg, std::uint64_t seed) {
  IrmModel model(cfg);
  Rng rng(seed);
  model.vem.init(rng);
  model.aim.init(rng);
  return model;
}

std::vector<nn::Parameter*> IrmModel::parameters() {
  std::vector<nn::Parameter*> out = vem.parameters();
  for (auto* p : aim.parameters()) out.push_back(p);
  return out;
}

void IrmModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

void IrmModel::save(const std::filesystem::path& path) {
  const auto params = parameters();
  save_parameters(path, params);
}

void IrmModel::load(const std::filesystem::path& path) {
  const auto params = parameters();
  load_parameters(path, params);
}

IterationResult run_iterations(IrmModel& model, const vem::FrameFeatures& frames,
                               std::span<const ClueCandidate> candidates,
                               const std::string& question, int extra_iterations) {
  if (extra_iterations < 0) throw ValidationError("iteration count must be >= 0");

  IterationResult result;
  result.visual.compressed =
      vem::compress_visual(frames, vem::compression_instruction(question), model.vem.compressor,
                           model.instruction_embedder);
  result.visual.projected = vem::project(model.vem.projection, result.visual.compressed);

  const aim::ClueBank bank = aim::embed_clues(candidates, model.text_embedder);
  const nn::EmbeddingSeq question_emb{model.text_embedder.embed(question), {}};

  nn::EmbeddingSeq visual_global{result.visual.projected, {}};
  for (int pass = 0; pass <= extra_iterations; ++pass) {
    const nn::EmbeddingSeq verified = aim::hallucination_verify(model.aim, bank, visual_global);
    result.logits = aim::relation_classify(model.aim, bank, verified, question_emb);
    aim::Refinement refinement = aim::refine_clues(bank, result.logits);
    result.refined = std::move(refinement.bank);
    result.kept = std::move(refinement.kept);
    result.kept_history.push_back(result.kept);

    result.visual.enhanced =
        vem::enhance(model.vem.enhancement, result.visual.projected, result.refined);
    result.visual.iteration = pass;
    visual_global.data = *result.visual.enhanced;
  }
  return result;
}

}  // namespace irm
