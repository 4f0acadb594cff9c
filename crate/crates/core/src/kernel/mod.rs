pub mod advantage;
pub mod history;
pub mod rng;
pub mod value;
pub mod world;

pub use advantage::{estimate_advantage, AdvantageReport, Distinguisher};
pub use history::{EventHistory, EventName, EventTag};
pub use rng::{derive_seed, Streams};
pub use value::Value;
pub use world::{event, req, trace_equivalent, BoxedFactory, Converter, Ctx, Inner, Request, Resource, Step, Trace, World, WorldFactory};
