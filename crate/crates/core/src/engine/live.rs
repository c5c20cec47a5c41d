use std::collections::HashMap;
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use hound::{SampleFormat, WavSpec, WavWriter};

use crate::gesture::PoseFrame;
use crate::protocol::{
    decode, encode, from_json, input_address, param_address, to_json, Arg, ControlMessage, ParameterCatalog,
    SessionManager, CONNECT, INPUT_POSE, INPUT_PREFIX, MAP, PARAM_NAMES, PARAM_VECTOR, POSE_NAMES,
};
use crate::resonance::ResonanceModel;
use crate::simplicial::SimplicialMap;

use super::audio::AudioProcessor;
use super::config::EngineConfig;
use super::control::Controller;
use super::trajectory::Trajectory;
use super::wav::{partial_path, read_wav_mono};
use super::{check_dimensions, load_map, load_model, EngineError};

const POLL: Duration = Duration::from_millis(20);

/// Everything the live server needs, already loaded.
#[derive(Debug, Clone)]
pub struct LiveSettings {
    pub config: EngineConfig,
    pub model: ResonanceModel<f64>,
    pub map: SimplicialMap<f64>,
    /// Looped when no pose input has arrived over the protocol.
    pub trajectory: Option<Trajectory>,
    /// Looped audio input; silence when absent.
    pub input: Option<Vec<f64>>,
    pub output_wav: Option<PathBuf>,
}

impl LiveSettings {
    /// Loads the files named in `config`. Model and map are required.
    pub fn load(config: &EngineConfig) -> Result<Self, EngineError> {
        config.check()?;
        let missing = |what: &str| EngineError::Config {
            line: 0,
            reason: format!("{what} is required for serving"),
        };
        let model = load_model(config.model_path.as_deref().ok_or_else(|| missing("model_path"))?)?;
        let map = load_map(config.map_path.as_deref().ok_or_else(|| missing("map_path"))?)?;
        let trajectory = config.trajectory_path.as_deref().map(Trajectory::load).transpose()?;
        let mut config = config.clone();
        let input = match config.input_wav.as_deref() {
            Some(path) => {
                let (samples, rate) = read_wav_mono(path)?;
                config.sample_rate = f64::from(rate);
                Some(samples)
            }
            None => {
                log::warn!("no audio device support; processing silence (set input_wav to loop a file)");
                None
            }
        };
        Ok(LiveSettings {
            output_wav: config.output_wav.clone(),
            config,
            model,
            map,
            trajectory,
            input,
        })
    }
}

/// Where a message came from, and where replies go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum ClientKey {
    Udp(SocketAddr),
    Bridge(u64),
}

enum Event {
    Message(ClientKey, ControlMessage),
    BridgeClosed(u64),
}

/// Latest analysis values from the audio thread.
#[derive(Debug, Clone, Copy, Default)]
struct AudioStatus {
    amplitude: f64,
    f0: Option<f64>,
    centroid: Option<f64>,
}

type BridgeWriters = Arc<Mutex<HashMap<u64, TcpStream>>>;

/// A running server. Dropping it without [`LiveHandle::shutdown`] leaves the
/// threads running until the process exits.
pub struct LiveHandle {
    osc_addr: SocketAddr,
    bridge_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<Result<(), EngineError>>>,
}

impl LiveHandle {
    pub fn osc_addr(&self) -> SocketAddr {
        self.osc_addr
    }

    pub fn bridge_addr(&self) -> SocketAddr {
        self.bridge_addr
    }

    /// Flag that stops every thread when set.
    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        Arc::clone(&self.stop)
    }

    /// Blocks until the stop flag is set, then finishes cleanly.
    pub fn wait(self) -> Result<(), EngineError> {
        while !self.stop.load(Ordering::SeqCst) {
            thread::sleep(POLL);
        }
        self.shutdown()
    }

    /// Stops all threads and finalizes the output file.
    pub fn shutdown(self) -> Result<(), EngineError> {
        self.stop.store(true, Ordering::SeqCst);
        let mut result = Ok(());
        for t in self.threads {
            match t.join() {
                Ok(Err(e)) if result.is_ok() => result = Err(e),
                Ok(_) => {}
                Err(_) => log::error!("a server thread panicked"),
            }
        }
        result
    }
}

/// Loads the configured files and starts serving.
pub fn run_live(config: &EngineConfig) -> Result<LiveHandle, EngineError> {
    LiveHandle::start(LiveSettings::load(config)?)
}

impl LiveHandle {
    pub fn start(settings: LiveSettings) -> Result<Self, EngineError> {
        let LiveSettings {
            config,
            model,
            map,
            trajectory,
            input,
            output_wav,
        } = settings;
        check_dimensions(&model, &map)?;
        let controller = Controller::new(&model, map, &config)?;
        let audio = AudioProcessor::new(&model, &config, config.noise_mix_live())?;

        let osc_bind = format!("{}:{}", config.osc_host, config.osc_port);
        let socket = UdpSocket::bind(&osc_bind).map_err(|source| EngineError::Bind {
            addr: osc_bind.clone(),
            source,
        })?;
        let bridge_bind = format!("127.0.0.1:{}", config.bridge_port);
        let listener = TcpListener::bind(&bridge_bind).map_err(|source| EngineError::Bind {
            addr: bridge_bind.clone(),
            source,
        })?;
        let io_err = |source| EngineError::Io {
            path: PathBuf::from(&osc_bind),
            source,
        };
        let osc_addr = socket.local_addr().map_err(io_err)?;
        let bridge_addr = listener.local_addr().map_err(io_err)?;
        socket.set_read_timeout(Some(POLL)).map_err(io_err)?;
        listener.set_nonblocking(true).map_err(io_err)?;
        let reply_socket = socket.try_clone().map_err(io_err)?;
        log::info!("serving OSC on udp {osc_addr}, JSON bridge on tcp {bridge_addr}");

        let stop = Arc::new(AtomicBool::new(false));
        let (event_tx, event_rx) = mpsc::channel();
        let (params_tx, params_rx) = mpsc::channel();
        let (status_tx, status_rx) = mpsc::channel();
        let writers: BridgeWriters = Arc::default();

        let mut threads = Vec::new();
        {
            let (stop, tx) = (Arc::clone(&stop), event_tx.clone());
            threads.push(spawn("osc-receive", move || receive_udp(socket, tx, stop)));
        }
        {
            let (stop, writers) = (Arc::clone(&stop), Arc::clone(&writers));
            threads.push(spawn("bridge-accept", move || accept_bridge(listener, event_tx, writers, stop)));
        }
        {
            let stop = Arc::clone(&stop);
            let config = config.clone();
            threads.push(spawn("audio", move || {
                run_audio(audio, &config, input, output_wav.as_deref(), params_rx, status_tx, stop)
            }));
        }
        {
            let stop = Arc::clone(&stop);
            let mut control = ControlLoop {
                catalog: catalog_for(controller.map().dim()),
                sessions: SessionManager::new(),
                controller,
                trajectory,
                injected: None,
                status: AudioStatus::default(),
                socket: reply_socket,
                writers,
                mesh: String::new(),
                config,
            };
            control.mesh = mesh_json(control.controller.map());
            threads.push(spawn("control", move || control.run(event_rx, params_tx, status_rx, stop)));
        }
        Ok(LiveHandle {
            osc_addr,
            bridge_addr,
            stop,
            threads,
        })
    }
}

fn spawn(
    name: &str,
    f: impl FnOnce() -> Result<(), EngineError> + Send + 'static,
) -> JoinHandle<Result<(), EngineError>> {
    thread::Builder::new()
        .name(name.to_string())
        .spawn(f)
        .expect("thread spawn")
}

fn catalog_for(dim: usize) -> ParameterCatalog {
    let mut catalog = ParameterCatalog::canonical();
    catalog.register(PARAM_VECTOR, vec![0.0; dim]);
    catalog
}

/// Mesh description sent in reply to `/ViolinControl/Map`.
fn mesh_json(map: &SimplicialMap<f64>) -> String {
    let hull: Vec<[usize; 2]> = map.hull().iter().map(|e| [e.from, e.to]).collect();
    let values: Vec<&[f64]> = (0..map.len()).map(|i| map.value(i)).collect();
    serde_json::json!({
        "dim": map.dim(),
        "vertices": map.points(),
        "triangles": map.triangles(),
        "hull": hull,
        "values": values,
    })
    .to_string()
}

fn receive_udp(socket: UdpSocket, tx: Sender<Event>, stop: Arc<AtomicBool>) -> Result<(), EngineError> {
    let mut buf = vec![0u8; 65_536];
    while !stop.load(Ordering::SeqCst) {
        match socket.recv_from(&mut buf) {
            Ok((n, from)) => match decode(&buf[..n]) {
                Ok(msg) => {
                    if tx.send(Event::Message(ClientKey::Udp(from), msg)).is_err() {
                        break;
                    }
                }
                Err(e) => log::warn!("dropping packet from {from}: {e}"),
            },
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(e) => log::warn!("udp receive: {e}"),
        }
    }
    Ok(())
}

fn accept_bridge(
    listener: TcpListener,
    tx: Sender<Event>,
    writers: BridgeWriters,
    stop: Arc<AtomicBool>,
) -> Result<(), EngineError> {
    static NEXT_ID: AtomicU64 = AtomicU64::new(1);
    let mut readers = Vec::new();
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let id = NEXT_ID.fetch_add(1, Ordering::SeqCst);
                log::info!("bridge client {id} connected from {peer}");
                let _ = stream.set_nonblocking(false);
                let _ = stream.set_read_timeout(Some(POLL));
                let _ = stream.set_nodelay(true);
                let Ok(writer) = stream.try_clone() else { continue };
                writers.lock().unwrap().insert(id, writer);
                let (tx, stop) = (tx.clone(), Arc::clone(&stop));
                readers.push(thread::spawn(move || read_bridge(id, stream, tx, stop)));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(e) => log::warn!("bridge accept: {e}"),
        }
    }
    for r in readers {
        let _ = r.join();
    }
    Ok(())
}

fn read_bridge(id: u64, stream: TcpStream, tx: Sender<Event>, stop: Arc<AtomicBool>) {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    while !stop.load(Ordering::SeqCst) {
        match reader.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {
                if line.ends_with('\n') {
                    if !line.trim().is_empty() {
                        match from_json(&line) {
                            Ok(msg) => {
                                if tx.send(Event::Message(ClientKey::Bridge(id), msg)).is_err() {
                                    return;
                                }
                            }
                            Err(e) => log::warn!("bridge client {id}: {e}"),
                        }
                    }
                    line.clear();
                }
            }
            // a timeout can leave a partial line in the buffer; keep it
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => break,
        }
    }
    let _ = tx.send(Event::BridgeClosed(id));
}

fn run_audio(
    mut audio: AudioProcessor,
    config: &EngineConfig,
    input: Option<Vec<f64>>,
    output_wav: Option<&Path>,
    params: Receiver<Vec<f64>>,
    status: Sender<AudioStatus>,
    stop: Arc<AtomicBool>,
) -> Result<(), EngineError> {
    let fs = config.sample_rate;
    let block = config.block_size;
    let wav_err = |path: &Path, source| EngineError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = match output_wav {
        Some(path) => {
            let spec = WavSpec {
                channels: 1,
                sample_rate: fs.round() as u32,
                bits_per_sample: 32,
                sample_format: SampleFormat::Float,
            };
            Some(WavWriter::create(partial_path(path), spec).map_err(|e| wav_err(path, e))?)
        }
        None => None,
    };
    let source = input.filter(|s| !s.is_empty());
    let mut cursor = 0;
    let mut in_block = vec![0.0; block];
    let mut out_block = vec![0.0; block];
    let mut current = AudioStatus::default();
    let started = Instant::now();
    let mut processed: u64 = 0;
    while !stop.load(Ordering::SeqCst) {
        if let Some(latest) = params.try_iter().last() {
            if let Err(e) = audio.retarget(&latest) {
                log::warn!("rejected parameter vector: {e}");
            }
        }
        if let Some(src) = &source {
            for x in in_block.iter_mut() {
                *x = src[cursor];
                cursor = (cursor + 1) % src.len();
            }
        }
        let report = audio.process(&in_block, &mut out_block);
        current.amplitude = report.input_level;
        if let Some(frame) = report.frames.last() {
            current.f0 = frame.f0;
            current.centroid = frame.centroid;
        }
        let _ = status.send(current);
        if let (Some(w), Some(path)) = (writer.as_mut(), output_wav) {
            for &y in &out_block {
                w.write_sample(y as f32).map_err(|e| wav_err(path, e))?;
            }
        }
        processed += block as u64;
        let due = started + Duration::from_secs_f64(processed as f64 / fs);
        let now = Instant::now();
        if due > now {
            thread::sleep(due - now);
        }
    }
    if let (Some(w), Some(path)) = (writer, output_wav) {
        w.finalize().map_err(|e| wav_err(path, e))?;
        std::fs::rename(partial_path(path), path).map_err(|source| EngineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

struct ControlLoop {
    config: EngineConfig,
    controller: Controller,
    catalog: ParameterCatalog,
    sessions: SessionManager<ClientKey>,
    trajectory: Option<Trajectory>,
    /// Pose set over the protocol; overrides the trajectory once present.
    injected: Option<[f64; 12]>,
    status: AudioStatus,
    socket: UdpSocket,
    writers: BridgeWriters,
    mesh: String,
}

impl ControlLoop {
    fn run(
        mut self,
        events: Receiver<Event>,
        params: Sender<Vec<f64>>,
        status: Receiver<AudioStatus>,
        stop: Arc<AtomicBool>,
    ) -> Result<(), EngineError> {
        let tick = Duration::from_millis(self.config.control_tick_ms);
        let started = Instant::now();
        let mut next = started;
        while !stop.load(Ordering::SeqCst) {
            loop {
                let now = Instant::now();
                if now >= next {
                    break;
                }
                match events.recv_timeout(next - now) {
                    Ok(event) => self.handle_event(event),
                    Err(RecvTimeoutError::Timeout) => break,
                    Err(RecvTimeoutError::Disconnected) => return Ok(()),
                }
            }
            while let Ok(event) = events.try_recv() {
                self.handle_event(event);
            }
            if let Some(s) = status.try_iter().last() {
                self.status = s;
            }
            let now_ms = started.elapsed().as_millis() as u64;
            let pose = self.current_pose(now_ms as f64 / 1000.0);
            let frame = self.controller.update(&pose);
            let _ = params.send(frame.active.clone());
            self.publish(&pose, &frame.active);
            for reply in self.sessions.tick(&self.catalog, now_ms) {
                self.send(reply.to, &reply.msg);
            }
            next += tick;
            // after a stall, skip missed ticks rather than bursting
            let now = Instant::now();
            if next + tick < now {
                next = now;
            }
        }
        Ok(())
    }

    fn current_pose(&self, t: f64) -> PoseFrame<f64> {
        if let Some(values) = self.injected {
            return PoseFrame::from_values(t, &values);
        }
        match &self.trajectory {
            Some(tr) => {
                let duration = tr.duration();
                let local = if duration > 0.0 { t % duration } else { 0.0 };
                let mut pose = tr.sample(local, self.config.interpolation);
                pose.time = t;
                pose
            }
            None => PoseFrame::from_values(t, &self.neutral_pose()),
        }
    }

    fn neutral_pose(&self) -> [f64; 12] {
        let mut v = [0.0; 12];
        v[self.config.axes[2]] = self.config.normal_altitude;
        v
    }

    fn publish(&mut self, pose: &PoseFrame<f64>, active: &[f64]) {
        let s = self.status;
        let values = pose.values();
        let audio = [s.amplitude, s.f0.unwrap_or(0.0), s.centroid.unwrap_or(0.0)];
        for (name, v) in PARAM_NAMES.iter().zip(audio.iter().chain(values.iter())) {
            self.catalog.set(&param_address(name), *v as f32);
        }
        let vector: Vec<f32> = active.iter().map(|&v| v as f32).collect();
        self.catalog.set_vector(PARAM_VECTOR, &vector);
    }

    fn handle_event(&mut self, event: Event) {
        match event {
            Event::BridgeClosed(id) => {
                self.writers.lock().unwrap().remove(&id);
                self.sessions.disconnect(&ClientKey::Bridge(id));
            }
            Event::Message(client, msg) => self.handle_message(client, msg),
        }
    }

    fn handle_message(&mut self, client: ClientKey, msg: ControlMessage) {
        let address = msg.address.as_str();
        if address == CONNECT {
            // an optional int argument names the UDP port for reports
            let reply_to = match (client, msg.args.as_slice()) {
                (ClientKey::Udp(addr), [Arg::Int(port)]) if (1..=65535).contains(port) => {
                    ClientKey::Udp(SocketAddr::new(addr.ip(), *port as u16))
                }
                _ => client,
            };
            let reply = self.sessions.connect(client, reply_to);
            self.send(reply.to, &reply.msg);
        } else if address == MAP {
            let reply = ControlMessage::new(MAP, vec![Arg::Str(self.mesh.clone())]);
            self.send(client, &reply);
        } else if address.starts_with(INPUT_PREFIX) {
            if let Err(reason) = self.apply_input(&msg) {
                self.send(client, &ControlMessage::error(reason, address));
            }
        } else {
            for reply in self.sessions.handle(client, &msg, &self.catalog) {
                self.send(reply.to, &reply.msg);
            }
        }
    }

    fn apply_input(&mut self, msg: &ControlMessage) -> Result<(), String> {
        let floats: Option<Vec<f64>> = msg.args.iter().map(|a| a.as_f32().map(f64::from)).collect();
        let floats = floats.ok_or("pose input takes numeric arguments")?;
        if !floats.iter().all(|v| v.is_finite()) {
            return Err("pose input must be finite".into());
        }
        if msg.address == INPUT_POSE {
            let values: [f64; 12] = floats.try_into().map_err(|_| "Pose takes 12 values")?;
            self.injected = Some(values);
            return Ok(());
        }
        let index = POSE_NAMES
            .iter()
            .position(|name| input_address(name) == msg.address)
            .ok_or("unknown input address")?;
        let [value] = floats[..] else {
            return Err("single-axis input takes one value".into());
        };
        let mut values = self.injected.unwrap_or_else(|| self.current_pose(0.0).values());
        values[index] = value;
        self.injected = Some(values);
        Ok(())
    }

    fn send(&mut self, to: ClientKey, msg: &ControlMessage) {
        match to {
            ClientKey::Udp(addr) => match encode(msg) {
                Ok(bytes) => {
                    if let Err(e) = self.socket.send_to(&bytes, addr) {
                        log::debug!("send to {addr}: {e}");
                    }
                }
                Err(e) => log::warn!("cannot encode {}: {e}", msg.address),
            },
            ClientKey::Bridge(id) => {
                let mut line = to_json(msg);
                line.push('\n');
                let mut writers = self.writers.lock().unwrap();
                let failed = match writers.get_mut(&id) {
                    Some(stream) => stream.write_all(line.as_bytes()).is_err(),
                    None => false,
                };
                if failed {
                    writers.remove(&id);
                    drop(writers);
                    self.sessions.disconnect(&ClientKey::Bridge(id));
                }
            }
        }
    }
}
