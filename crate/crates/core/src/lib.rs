//! Headless interaction engine for virtual screens seen through a head-mounted
//! display and driven from a physical touchscreen.
//!
//! Screens sit on a cylinder around the user ([`geometry`]). Tablet contacts, gaze
//! rays and head poses ([`input`]) move a cursor between and within screens
//! ([`routing`]) and navigate depth layers behind the physical screen ([`layers`]).
//! [`tasks`] generates and scores the content transfer and puzzle tasks, and
//! [`session`] replays traces or hosts live sessions over a WebSocket.
//!
//! [`agent`] is a scripted user that produces complete task traces, and [`batch`]
//! runs independent jobs on the rayon pool when the `parallel` feature is on.

pub mod agent;
pub mod batch;
pub mod error;
pub mod geometry;
pub mod input;
pub mod layers;
pub mod records;
pub mod routing;
pub mod session;
pub mod tasks;
