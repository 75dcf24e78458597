//! Asynchronous multiparty sessions: processes, networks, global types with
//! queues, their labelled transition systems, and event structure semantics
//! (flow event structures for networks, prime event structures for types),
//! including a bounded check that the two configuration domains coincide.

pub mod domains;
pub mod events;
pub mod kernel;
pub mod semantics;
pub mod textfmt;
pub mod traces;
pub mod typing;
