mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, UdpSocket};
use std::time::{Duration, Instant};

use resteer_core::engine::{read_wav_mono, EngineConfig, Interpolation, LiveHandle, LiveSettings, Trajectory};
use resteer_core::protocol::{
    decode, encode, from_json, input_address, param_address, to_json, Arg, ControlMessage, CONNECT, CONNECTED,
    DISCONNECT, ERROR, INPUT_POSE, MAP, PARAM_VECTOR,
};
use resteer_core::resonance::ResonanceModel;
use resteer_core::simplicial::SimplicialMap;

use common::*;

fn settings(trajectory: Option<Trajectory>) -> LiveSettings {
    LiveSettings {
        config: EngineConfig {
            osc_host: "127.0.0.1".into(),
            osc_port: 0,
            bridge_port: 0,
            ..EngineConfig::default()
        },
        model: ResonanceModel::parse("fixture", FIXTURE_MODEL).unwrap(),
        map: SimplicialMap::parse(FIXTURE_MAP).unwrap(),
        trajectory,
        input: Some(fixture_input(0.5)),
        output_wav: None,
    }
}

struct Client {
    socket: UdpSocket,
    server: std::net::SocketAddr,
}

impl Client {
    fn new(server: &LiveHandle) -> Self {
        let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
        socket.set_read_timeout(Some(Duration::from_millis(50))).unwrap();
        Client {
            socket,
            server: server.osc_addr(),
        }
    }

    fn send(&self, msg: &ControlMessage) {
        self.socket.send_to(&encode(msg).unwrap(), self.server).unwrap();
    }

    /// Everything received during `window`, with arrival times.
    fn collect(&self, window: Duration) -> Vec<(Instant, ControlMessage)> {
        let end = Instant::now() + window;
        let mut buf = [0u8; 65_536];
        let mut out = Vec::new();
        while Instant::now() < end {
            if let Ok(n) = self.socket.recv(&mut buf) {
                out.push((Instant::now(), decode(&buf[..n]).unwrap()));
            }
        }
        out
    }

    fn first(&self, address: &str, timeout: Duration) -> Option<ControlMessage> {
        let end = Instant::now() + timeout;
        let mut buf = [0u8; 65_536];
        while Instant::now() < end {
            if let Ok(n) = self.socket.recv(&mut buf) {
                let msg = decode(&buf[..n]).unwrap();
                if msg.address == address {
                    return Some(msg);
                }
            }
        }
        None
    }
}

fn floats(msg: &ControlMessage) -> Vec<f32> {
    msg.args.iter().map(|a| a.as_f32().unwrap()).collect()
}

fn as_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn pose_at(x: f64, y: f64) -> ControlMessage {
    let mut args = vec![Arg::Float(0.0); 12];
    args[0] = Arg::Float(x as f32);
    args[1] = Arg::Float(y as f32);
    args[2] = Arg::Float(1.0);
    ControlMessage::new(INPUT_POSE, args)
}

#[test]
fn z_at_100_ms_gives_about_ten_reports_per_second_and_halts() {
    let server = LiveHandle::start(settings(None)).unwrap();
    let client = Client::new(&server);
    client.send(&ControlMessage::new(CONNECT, vec![]));
    assert!(client.first(CONNECTED, Duration::from_secs(2)).is_some());
    client.send(&ControlMessage::int(param_address("Z"), 100));
    let _ = client.collect(Duration::from_millis(150));
    let reports = client.collect(Duration::from_secs(1));
    let z: Vec<_> = reports.iter().filter(|(_, m)| m.address == param_address("Z")).collect();
    assert!((8..=12).contains(&z.len()), "{} reports", z.len());
    assert!(z.iter().all(|(_, m)| m.args == vec![Arg::Float(1.0)]));

    client.send(&ControlMessage::int(param_address("Z"), -1));
    let _ = client.collect(Duration::from_millis(100));
    let after = client.collect(Duration::from_millis(400));
    assert!(after.is_empty(), "{after:?}");
    server.shutdown().unwrap();
}

#[test]
fn requests_before_connect_are_rejected_and_disconnect_stops_reports() {
    let server = LiveHandle::start(settings(None)).unwrap();
    let client = Client::new(&server);
    client.send(&ControlMessage::int(param_address("Amplitude"), 30));
    let err = client.first(ERROR, Duration::from_secs(2)).expect("error reply");
    assert_eq!(err.args[1], Arg::Str(param_address("Amplitude")));

    client.send(&ControlMessage::new(CONNECT, vec![]));
    client.send(&ControlMessage::int(param_address("Amplitude"), 0));
    let flowing = client.collect(Duration::from_millis(300));
    assert!(flowing.iter().filter(|(_, m)| m.address == param_address("Amplitude")).count() > 20);
    client.send(&ControlMessage::new(DISCONNECT, vec![]));
    let _ = client.collect(Duration::from_millis(100));
    assert!(client.collect(Duration::from_millis(300)).is_empty());
    server.shutdown().unwrap();
}

#[test]
fn pose_injection_interpolates_between_vertices() {
    let server = LiveHandle::start(settings(None)).unwrap();
    let map = SimplicialMap::parse(FIXTURE_MAP).unwrap();
    let client = Client::new(&server);
    client.send(&ControlMessage::new(CONNECT, vec![]));
    client.send(&ControlMessage::int(PARAM_VECTOR, 0));
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let p = [s, 0.3 * s];
        client.send(&pose_at(p[0], p[1]));
        let _ = client.collect(Duration::from_millis(60));
        let msg = client.first(PARAM_VECTOR, Duration::from_secs(1)).unwrap();
        // the server sees the position as float32
        let expected = as_f32(&map.interpolate([f64::from(p[0] as f32), f64::from(p[1] as f32)]));
        assert_eq!(floats(&msg), expected, "s = {s}");
    }
    // single-axis input moves only that axis
    client.send(&ControlMessage::float(input_address("Y"), 1.0));
    client.send(&ControlMessage::float(input_address("X"), 1.0));
    let _ = client.collect(Duration::from_millis(60));
    let msg = client.first(PARAM_VECTOR, Duration::from_secs(1)).unwrap();
    assert_eq!(floats(&msg), as_f32(map.value(2)));
    // wrong arity is reported
    client.send(&ControlMessage::new(INPUT_POSE, vec![Arg::Float(1.0)]));
    assert!(client.first(ERROR, Duration::from_secs(1)).is_some());
    server.shutdown().unwrap();
}

#[test]
fn looped_trajectory_telemetry_matches_offline_rows() {
    // step-held corners, 300 ms each: telemetry must always be one corner row,
    // visited in trajectory order
    let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let mut csv = String::new();
    for (i, c) in corners.iter().enumerate() {
        csv.push_str(&format!("{},{},{},1,0,0,0,0,0,0,0,0,0\n", 0.3 * i as f64, c[0], c[1]));
    }
    csv.push_str("1.2,0,0,1,0,0,0,0,0,0,0,0,0\n");
    let mut s = settings(Some(Trajectory::parse(&csv).unwrap()));
    s.config.interpolation = Interpolation::Step;
    let map = s.map.clone();
    let server = LiveHandle::start(s).unwrap();
    let client = Client::new(&server);
    client.send(&ControlMessage::new(CONNECT, vec![]));
    client.send(&ControlMessage::int(PARAM_VECTOR, 0));
    let reports = client.collect(Duration::from_millis(1500));
    let rows: Vec<Vec<f32>> = (0..4)
        .map(|i| {
            let idx = map.points().iter().position(|&p| p == corners[i]).unwrap();
            as_f32(map.value(idx))
        })
        .collect();
    let mut visits = Vec::new();
    for (_, m) in reports.iter().filter(|(_, m)| m.address == PARAM_VECTOR) {
        let v = floats(m);
        let corner = rows.iter().position(|r| *r == v).expect("telemetry is a corner row");
        if visits.last() != Some(&corner) {
            visits.push(corner);
        }
    }
    assert!(visits.len() >= 4, "{visits:?}");
    for w in visits.windows(2) {
        assert_eq!(w[1], (w[0] + 1) % 4, "{visits:?}");
    }
    server.shutdown().unwrap();
}

#[test]
fn json_bridge_serves_mesh_and_telemetry() {
    let server = LiveHandle::start(settings(None)).unwrap();
    let stream = TcpStream::connect(server.bridge_addr()).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(2))).unwrap();
    let mut writer = stream.try_clone().unwrap();
    let mut reader = BufReader::new(stream);
    let mut send = |m: &ControlMessage| writer.write_all(format!("{}\n", to_json(m)).as_bytes()).unwrap();
    let mut next = |address: &str| loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let msg = from_json(&line).unwrap();
        if msg.address == address {
            return msg;
        }
    };

    send(&ControlMessage::new(MAP, vec![]));
    let mesh = next(MAP);
    let Arg::Str(text) = &mesh.args[0] else { panic!("mesh is a string") };
    let mesh: serde_json::Value = serde_json::from_str(text).unwrap();
    assert_eq!(mesh["dim"], 15);
    assert_eq!(mesh["vertices"].as_array().unwrap().len(), 4);
    assert_eq!(mesh["triangles"], serde_json::json!([[0, 1, 2], [0, 2, 3]]));

    send(&ControlMessage::new(CONNECT, vec![]));
    next(CONNECTED);
    send(&ControlMessage::int(param_address("Amplitude"), 30));
    send(&ControlMessage::int(PARAM_VECTOR, 100));
    send(&ControlMessage::new(INPUT_POSE, {
        let mut a = vec![Arg::Float(0.0); 12];
        a[0] = Arg::Float(1.0);
        a[2] = Arg::Float(1.0);
        a
    }));
    let amp = next(&param_address("Amplitude"));
    assert_eq!(amp.args.len(), 1);
    let map = SimplicialMap::parse(FIXTURE_MAP).unwrap();
    let target = as_f32(map.value(1));
    let deadline = Instant::now() + Duration::from_secs(2);
    loop {
        let v = next(PARAM_VECTOR);
        if floats(&v) == target {
            break;
        }
        assert!(Instant::now() < deadline, "vector never reached the vertex row");
    }
    server.shutdown().unwrap();
}

#[test]
fn connect_with_port_redirects_reports() {
    let server = LiveHandle::start(settings(None)).unwrap();
    let control = Client::new(&server);
    let listener = UdpSocket::bind("127.0.0.1:0").unwrap();
    listener.set_read_timeout(Some(Duration::from_millis(500))).unwrap();
    let port = listener.local_addr().unwrap().port();
    control.send(&ControlMessage::int(CONNECT, i32::from(port)));
    control.send(&ControlMessage::int(param_address("X"), 0));
    let mut buf = [0u8; 1024];
    let mut got = Vec::new();
    while got.len() < 3 {
        let n = listener.recv(&mut buf).expect("reports on the requested port");
        got.push(decode(&buf[..n]).unwrap().address);
    }
    assert!(got.contains(&param_address("X")));
    server.shutdown().unwrap();
}

#[test]
fn shutdown_leaves_complete_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("live.wav");
    let mut s = settings(None);
    s.output_wav = Some(out.clone());
    let server = LiveHandle::start(s).unwrap();
    std::thread::sleep(Duration::from_millis(300));
    assert!(!out.exists(), "only the partial file exists while running");
    server.shutdown().unwrap();
    let (samples, rate) = read_wav_mono(&out).unwrap();
    assert_eq!(rate, 44_100);
    assert!(samples.len() >= FIXTURE_BLOCK);
    assert_eq!(samples.len() % FIXTURE_BLOCK, 0);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn port_in_use_is_reported() {
    let taken = UdpSocket::bind("127.0.0.1:0").unwrap();
    let mut s = settings(None);
    s.config.osc_port = taken.local_addr().unwrap().port();
    let err = LiveHandle::start(s).err().expect("bind fails");
    assert!(matches!(err, resteer_core::engine::EngineError::Bind { .. }), "{err}");
}
