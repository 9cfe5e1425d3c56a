use std::io::Write;
use std::net::TcpStream;
use std::thread;

use pretzel::transport::{pair_inmemory, Direction, Faulty, Listener, Recording, TcpChannel};
use pretzel_core::channel::{Channel, Frame, Tag, TransportError, MAX_FRAME_LEN};

fn frames() -> Vec<Frame> {
    vec![
        Frame::new(Tag::Hello, vec![1; 33]),
        Frame::new(Tag::ModelChunk, vec![]),
        Frame::new(Tag::DotBlinded, (0..200_000u32).map(|i| i as u8).collect()),
        Frame::new(Tag::Output, vec![0, 1, 0]),
        Frame::new(Tag::Abort, b"bye".to_vec()),
    ]
}

fn exchange<C: Channel + Send>(mut a: C, mut b: C) -> (C, C) {
    thread::scope(|s| {
        s.spawn(|| {
            for f in frames() {
                a.send_frame(&f).unwrap();
            }
            for f in frames() {
                assert_eq!(a.recv_frame().unwrap(), f);
            }
        });
        for f in frames() {
            assert_eq!(b.recv_frame().unwrap(), f);
            b.send_frame(&f).unwrap();
        }
    });
    (a, b)
}

fn wire_total() -> u64 {
    frames().iter().map(|f| f.wire_len() as u64).sum()
}

#[test]
fn memory_frames_and_counters() {
    let (a, b) = pair_inmemory();
    let (a, b) = exchange(a, b);
    let (sa, sb) = (a.stats(), b.stats());
    assert_eq!(sa.bytes_sent, wire_total());
    assert_eq!(sa.bytes_received, wire_total());
    assert_eq!(sa.frames_sent, 5);
    assert_eq!(sb.frames_received, 5);
    assert_eq!(sb.bytes_sent, sa.bytes_received);
}

#[test]
fn memory_close_and_oversize() {
    let (mut a, mut b) = pair_inmemory();
    let h = a.stats_handle();
    a.send_frame(&Frame::new(Tag::Hello, vec![7])).unwrap();
    a.close();
    assert_eq!(b.recv_frame().unwrap().payload, vec![7]);
    assert_eq!(b.recv_frame(), Err(TransportError::Closed));
    assert_eq!(a.send_frame(&Frame::new(Tag::Hello, vec![])), Err(TransportError::Closed));
    assert_eq!(h.get().bytes_sent, 6);

    let (mut a, _b) = pair_inmemory();
    let big = Frame::new(Tag::ModelChunk, vec![0; MAX_FRAME_LEN + 1]);
    assert_eq!(a.send_frame(&big), Err(TransportError::Oversize(MAX_FRAME_LEN + 1)));
    assert_eq!(a.recv_frame(), Err(TransportError::Poisoned));
}

fn tcp_pair() -> (TcpChannel, TcpChannel) {
    let l = Listener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    let h = thread::spawn(move || l.accept().unwrap());
    let c = TcpChannel::connect(addr).unwrap();
    (c, h.join().unwrap())
}

#[test]
fn tcp_frames_and_counters() {
    let (a, b) = tcp_pair();
    assert!(a.peer_addr().is_some());
    let (a, b) = exchange(a, b);
    assert_eq!(a.stats().bytes_sent, wire_total());
    assert_eq!(b.stats().bytes_received, wire_total());
    assert_eq!(a.stats().bytes_received, wire_total());
}

#[test]
fn tcp_peer_close_is_closed() {
    let (a, mut b) = tcp_pair();
    drop(a);
    assert_eq!(b.recv_frame(), Err(TransportError::Closed));
    assert_eq!(b.recv_frame(), Err(TransportError::Poisoned));
}

/// Raw socket on one end so malformed bytes can be written.
fn raw_pair() -> (TcpStream, TcpChannel) {
    let l = Listener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    let h = thread::spawn(move || l.accept().unwrap());
    let raw = TcpStream::connect(addr).unwrap();
    (raw, h.join().unwrap())
}

#[test]
fn tcp_short_read() {
    let (mut raw, mut ch) = raw_pair();
    raw.write_all(&[Tag::Output as u8, 10, 0, 0, 0, 1, 2, 3]).unwrap();
    drop(raw);
    assert_eq!(ch.recv_frame(), Err(TransportError::ShortRead));

    let (mut raw, mut ch) = raw_pair();
    raw.write_all(&[Tag::Output as u8, 10]).unwrap();
    drop(raw);
    assert_eq!(ch.recv_frame(), Err(TransportError::ShortRead));
}

#[test]
fn tcp_bad_headers() {
    let (mut raw, mut ch) = raw_pair();
    raw.write_all(&[0x42, 0, 0, 0, 0]).unwrap();
    assert_eq!(ch.recv_frame(), Err(TransportError::UnknownTag(0x42)));

    let (mut raw, mut ch) = raw_pair();
    let len = (MAX_FRAME_LEN as u32 + 1).to_le_bytes();
    raw.write_all(&[Tag::Hello as u8, len[0], len[1], len[2], len[3]]).unwrap();
    assert_eq!(ch.recv_frame(), Err(TransportError::Oversize(MAX_FRAME_LEN + 1)));
    assert_eq!(ch.recv_frame(), Err(TransportError::Poisoned));
}

#[test]
fn tcp_encoding_is_tag_length_payload() {
    let (a, mut raw) = {
        let l = Listener::bind("127.0.0.1:0").unwrap();
        let addr = l.local_addr().unwrap();
        let h = thread::spawn(move || l.accept().unwrap());
        let raw = TcpStream::connect(addr).unwrap();
        (h.join().unwrap(), raw)
    };
    let mut a = a;
    a.send_frame(&Frame::new(Tag::GcTables, vec![9, 8, 7])).unwrap();
    drop(a);
    let mut buf = Vec::new();
    std::io::Read::read_to_end(&mut raw, &mut buf).unwrap();
    assert_eq!(buf, vec![Tag::GcTables as u8, 3, 0, 0, 0, 9, 8, 7]);
}

#[test]
fn recording_logs_both_directions() {
    let (a, mut b) = pair_inmemory();
    let (mut a, log) = Recording::new(a);
    a.send_frame(&Frame::new(Tag::Hello, vec![1])).unwrap();
    b.send_frame(&Frame::new(Tag::OtMsg, vec![2])).unwrap();
    b.send_frame(&Frame::new(Tag::OtMsg, vec![3])).unwrap();
    a.recv_frame().unwrap();
    a.recv_frame().unwrap();
    assert_eq!(log.frames().len(), 3);
    assert_eq!(log.sent(), vec![Frame::new(Tag::Hello, vec![1])]);
    assert_eq!(log.count(Direction::Received, Tag::OtMsg), 2);
    assert_eq!(log.received()[1].payload, vec![3]);
    log.clear();
    assert!(log.frames().is_empty());
}

#[test]
fn faulty_fails_from_the_chosen_op() {
    let (a, mut b) = pair_inmemory();
    let mut f = Faulty::new(a, 2);
    f.send_frame(&Frame::new(Tag::Hello, vec![])).unwrap();
    b.send_frame(&Frame::new(Tag::Hello, vec![])).unwrap();
    f.recv_frame().unwrap();
    assert!(!f.tripped());
    assert!(matches!(f.send_frame(&Frame::new(Tag::Hello, vec![])), Err(TransportError::Io(_))));
    assert!(f.tripped());
    assert!(f.recv_frame().is_err());
    b.recv_frame().unwrap();
    assert_eq!(b.recv_frame(), Err(TransportError::Closed));
}
