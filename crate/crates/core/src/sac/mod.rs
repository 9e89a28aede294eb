//! Soft actor-critic over a squashed Gaussian policy, with hand-written
//! backpropagation for the small fully connected networks involved.

mod adam;
mod agent;
mod mlp;
mod policy;
mod replay;

pub use adam::Adam;
pub use agent::{ActorGrads, Batch, CriticGrads, SacAgent, SacConfig, UpdateStats};
pub use mlp::{Linear, Mlp, MlpTrace};
pub use policy::{log_tanh_jacobian, squashed_log_prob, ActionSample, PolicyBatch, SquashedGaussianPolicy, LOG_STD_MAX, LOG_STD_MIN};
pub use replay::{ReplayBuffer, Transition};
