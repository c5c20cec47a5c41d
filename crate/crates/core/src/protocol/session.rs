use std::collections::BTreeMap;
use std::fmt::Debug;

use super::registry::{ParameterCatalog, Registry};
use super::{ControlMessage, CONNECT, CONNECTED, DISCONNECT, PARAM_PREFIX};

/// A message addressed to one client's return endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionReply<E> {
    pub to: E,
    pub msg: ControlMessage,
}

#[derive(Debug, Clone)]
struct Session<E> {
    reply_to: E,
    registry: Registry,
}

/// Per-client registries keyed by the client's source endpoint.
///
/// Requests from a client that has not sent `/ViolinControl/Connect` get an
/// error reply. Connecting again keeps the subscriptions and refreshes the
/// return endpoint; disconnecting drops them.
#[derive(Debug, Clone)]
pub struct SessionManager<E> {
    sessions: BTreeMap<E, Session<E>>,
}

impl<E> Default for SessionManager<E> {
    fn default() -> Self {
        SessionManager {
            sessions: BTreeMap::new(),
        }
    }
}

impl<E: Ord + Clone + Debug> SessionManager<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn is_connected(&self, client: &E) -> bool {
        self.sessions.contains_key(client)
    }

    pub fn registry(&self, client: &E) -> Option<&Registry> {
        self.sessions.get(client).map(|s| &s.registry)
    }

    pub fn clients(&self) -> impl Iterator<Item = &E> {
        self.sessions.keys()
    }

    /// Opens (or refreshes) a session whose reports go to `reply_to`.
    pub fn connect(&mut self, client: E, reply_to: E) -> SessionReply<E> {
        self.sessions
            .entry(client)
            .and_modify(|s| s.reply_to = reply_to.clone())
            .or_insert_with(|| Session {
                reply_to: reply_to.clone(),
                registry: Registry::new(),
            });
        SessionReply {
            to: reply_to,
            msg: ControlMessage::new(CONNECTED, vec![]),
        }
    }

    pub fn disconnect(&mut self, client: &E) -> bool {
        let known = self.sessions.remove(client).is_some();
        if !known {
            log::info!("disconnect from unknown client {client:?} ignored");
        }
        known
    }

    /// Handles Connect, Disconnect and parameter requests from `client`.
    pub fn handle(&mut self, client: E, msg: &ControlMessage, catalog: &ParameterCatalog) -> Vec<SessionReply<E>> {
        match msg.address.as_str() {
            CONNECT => vec![self.connect(client.clone(), client)],
            DISCONNECT => {
                self.disconnect(&client);
                Vec::new()
            }
            addr if addr.starts_with(PARAM_PREFIX) => match self.sessions.get_mut(&client) {
                None => vec![SessionReply {
                    to: client,
                    msg: ControlMessage::error("not connected", addr),
                }],
                Some(session) => match session.registry.apply_request(msg, catalog) {
                    Ok(_) => Vec::new(),
                    Err(e) => vec![SessionReply {
                        to: session.reply_to.clone(),
                        msg: e.to_reply(),
                    }],
                },
            },
            addr => vec![SessionReply {
                to: client,
                msg: ControlMessage::error("unknown address", addr),
            }],
        }
    }

    /// Due reports for every client.
    pub fn tick(&mut self, catalog: &ParameterCatalog, now: u64) -> Vec<SessionReply<E>> {
        let mut out = Vec::new();
        for session in self.sessions.values_mut() {
            for msg in session.registry.tick(catalog, now) {
                out.push(SessionReply {
                    to: session.reply_to.clone(),
                    msg,
                });
            }
        }
        out
    }
}
