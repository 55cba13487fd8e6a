use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::time::Duration;

use crafteam_core::llm::ProviderConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderMode {
    Mock,
    Http(ProviderConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub bind: IpAddr,
    pub port: u16,
    pub data_dir: PathBuf,
    pub provider: ProviderMode,
    /// Wall-clock time per virtual quantum for live sessions. `None` leaves
    /// sessions paused until a client ends them.
    pub tick: Option<Duration>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            data_dir: PathBuf::from("data"),
            provider: ProviderMode::Mock,
            tick: Some(Duration::from_millis(1000)),
        }
    }
}

impl Config {
    /// Reads `PORT`, `BIND_ADDR`, `DATA_DIR`, `TICK_MS` and `PROVIDER_MODE`
    /// (`mock` or `http`); the http provider takes the other `PROVIDER_*`
    /// variables.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok(), ProviderConfig::from_env)
    }

    pub fn from_lookup(
        get: impl Fn(&str) -> Option<String>,
        http: impl FnOnce() -> ProviderConfig,
    ) -> Result<Self, String> {
        let mut c = Config::default();
        if let Some(v) = get("PORT") {
            c.port = v.parse().map_err(|_| format!("PORT: not a port number: {v}"))?;
        }
        if let Some(v) = get("BIND_ADDR") {
            c.bind = v.parse().map_err(|_| format!("BIND_ADDR: not an IP address: {v}"))?;
        }
        if let Some(v) = get("DATA_DIR") {
            c.data_dir = PathBuf::from(v);
        }
        if let Some(v) = get("TICK_MS") {
            let ms: u64 = v.parse().map_err(|_| format!("TICK_MS: not an integer: {v}"))?;
            c.tick = (ms > 0).then(|| Duration::from_millis(ms));
        }
        match get("PROVIDER_MODE").as_deref() {
            None | Some("mock") => {}
            Some("http") => c.provider = ProviderMode::Http(http()),
            Some(other) => return Err(format!("PROVIDER_MODE: expected mock or http, got {other}")),
        }
        Ok(c)
    }

    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.bind, self.port)
    }
}
