#include "smsge/config.hpp"

namespace smsge {

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = {{"feature_dim", c.feature_dim},
         {"num_heads", c.num_heads},
         {"hidden_dim", c.hidden_dim},
         {"head_hidden", c.head_hidden},
         {"t1", c.t1},
         {"t2", c.t2},
         {"lambda_c", c.lambda_c},
         {"multi_graph", c.multi_graph},
         {"structural_relations", c.structural_relations},
         {"collaborative_relations", c.collaborative_relations},
         {"cross_scale_inference", c.cross_scale_inference},
         {"subsequence_reconstruction", c.subsequence_reconstruction},
         {"frames", c.frames},
         {"rounds", c.rounds}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    ModelConfig d;
    c.feature_dim = j.value("feature_dim", d.feature_dim);
    c.num_heads = j.value("num_heads", d.num_heads);
    c.hidden_dim = j.value("hidden_dim", d.hidden_dim);
    c.head_hidden = j.value("head_hidden", d.head_hidden);
    c.t1 = j.value("t1", d.t1);
    c.t2 = j.value("t2", d.t2);
    c.lambda_c = j.value("lambda_c", d.lambda_c);
    c.multi_graph = j.value("multi_graph", d.multi_graph);
    c.structural_relations = j.value("structural_relations", d.structural_relations);
    c.collaborative_relations = j.value("collaborative_relations", d.collaborative_relations);
    c.cross_scale_inference = j.value("cross_scale_inference", d.cross_scale_inference);
    c.subsequence_reconstruction = j.value("subsequence_reconstruction", d.subsequence_reconstruction);
    c.frames = j.value("frames", d.frames);
    c.rounds = j.value("rounds", d.rounds);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"model", c.model},
         {"preset", c.preset},
         {"learning_rate", c.learning_rate},
         {"epochs", c.epochs},
         {"batch", c.batch},
         {"seed", c.seed},
         {"grad_clip", c.grad_clip},
         {"threads", c.threads},
         {"adam_beta1", c.adam_beta1},
         {"adam_beta2", c.adam_beta2},
         {"adam_eps", c.adam_eps}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    TrainConfig d;
    if (j.contains("model")) c.model = j["model"].get<ModelConfig>();
    c.preset = j.value("preset", d.preset);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.epochs = j.value("epochs", d.epochs);
    c.batch = j.value("batch", d.batch);
    c.seed = j.value("seed", d.seed);
    c.grad_clip = j.value("grad_clip", d.grad_clip);
    c.threads = j.value("threads", d.threads);
    c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
    c.adam_eps = j.value("adam_eps", d.adam_eps);
}

void to_json(nlohmann::json& j, const ProbeConfig& c) {
    j = {{"hidden", c.hidden},
         {"learning_rate", c.learning_rate},
         {"epochs", c.epochs},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ProbeConfig& c) {
    ProbeConfig d;
    c.hidden = j.value("hidden", d.hidden);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.epochs = j.value("epochs", d.epochs);
    c.seed = j.value("seed", d.seed);
}

}  // namespace smsge
