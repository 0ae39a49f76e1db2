use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use geoseg_core::backends::Registry;
use tokio::sync::{Mutex, OwnedMutexGuard};

use crate::config::{BusyPolicy, ServiceConfig};
use crate::error::{ServiceError, ServiceResult};
use crate::session::{CreateRequest, Session};

type Slot = Arc<Mutex<Session>>;

/// Shared service state. The session map is locked only briefly; each
/// session has its own async mutex that serialises its mutations.
pub struct AppState {
    pub config: ServiceConfig,
    pub registry: Registry,
    sessions: RwLock<HashMap<String, Slot>>,
}

impl AppState {
    pub fn new(config: ServiceConfig, registry: Registry) -> Arc<Self> {
        Arc::new(AppState {
            config,
            registry,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    /// Looks a session up, rebuilding it from its log on disk if it is not
    /// in memory (for example after a restart).
    fn slot(&self, id: &str) -> ServiceResult<Slot> {
        if let Some(s) = self.sessions.read().unwrap().get(id) {
            return Ok(s.clone());
        }
        let valid = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-');
        let dir = self.config.sessions_dir().join(id);
        if !valid || !dir.join(crate::event::LOG_FILE).is_file() {
            return Err(ServiceError::UnknownSession(id.to_string()));
        }
        let session = Session::resume(&dir, &self.registry)?;
        let mut map = self.sessions.write().unwrap();
        Ok(map
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(session)))
            .clone())
    }

    pub async fn create(self: &Arc<Self>, req: CreateRequest) -> ServiceResult<String> {
        let state = self.clone();
        let session = tokio::task::spawn_blocking(move || {
            let id = uuid::Uuid::new_v4().simple().to_string();
            Session::create(&id, &req, &state.config, &state.registry, &state.config.sessions_dir())
        })
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
        let id = session.id().to_string();
        self.sessions
            .write()
            .unwrap()
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    async fn lock_for_mutation(&self, id: &str) -> ServiceResult<OwnedMutexGuard<Session>> {
        let slot = self.slot(id)?;
        match self.config.busy_policy {
            BusyPolicy::Wait => Ok(slot.lock_owned().await),
            BusyPolicy::Reject => slot
                .try_lock_owned()
                .map_err(|_| ServiceError::Busy(id.to_string())),
        }
    }

    /// Runs `f` on the session on the blocking pool while holding its lock.
    pub async fn mutate<T, F>(self: &Arc<Self>, id: &str, f: F) -> ServiceResult<T>
    where
        T: Send + 'static,
        F: FnOnce(&mut Session, &Registry) -> ServiceResult<T> + Send + 'static,
    {
        let mut guard = self.lock_for_mutation(id).await?;
        let state = self.clone();
        tokio::task::spawn_blocking(move || f(&mut guard, &state.registry))
            .await
            .map_err(|e| ServiceError::Internal(e.to_string()))?
    }

    /// Read access; waits for an in-flight mutation of the same session.
    pub async fn read<T, F>(&self, id: &str, f: F) -> ServiceResult<T>
    where
        F: FnOnce(&Session) -> ServiceResult<T>,
    {
        let slot = self.slot(id)?;
        let guard = slot.lock().await;
        f(&guard)
    }
}
