use cclab_core::error::CoreError;
use cclab_core::kernel::value::Value;
use cclab_core::kernel::world::World;
use cclab_core::pir::db::*;

fn cells(xs: &[u64]) -> Value {
    Value::fields(xs)
}

fn sym(s: &str) -> Value {
    Value::sym(s)
}

fn db_world() -> World {
    World::new(1).with(Box::new(Db::new(3, 257))).unwrap()
}

#[test]
fn basic_db_flow() {
    let mut w = db_world();
    assert_eq!(w.request("S", "getQuery", &[]).unwrap(), Value::Absent);
    w.request("C0", "init", &[cells(&[5, 6, 7])]).unwrap();
    // Inactive: the query is dropped.
    w.request("C", "query", &[sym("q0")]).unwrap();
    assert_eq!(w.request("S", "getQuery", &[]).unwrap(), Value::Absent);
    assert_eq!(w.request("C0", "read", &[Value::Int(2)]).unwrap(), Value::Field(6));
    w.request("C0", "write", &[Value::Int(2), Value::Field(9)]).unwrap();
    w.request("C0", "initComplete", &[]).unwrap();
    assert_eq!(w.request("C0", "read", &[Value::Int(2)]).unwrap(), Value::Absent);
    w.request("C", "query", &[sym("q1")]).unwrap();
    w.request("C", "query", &[sym("q2")]).unwrap();
    assert_eq!(w.request("S", "getQuery", &[]).unwrap(), sym("q1"));
    assert_eq!(w.request("C", "reconstruct", &[]).unwrap(), Value::Absent);
    w.request("S", "answer", &[sym("a1")]).unwrap();
    w.request("S", "answer", &[sym("a2")]).unwrap();
    assert_eq!(w.request("C", "reconstruct", &[]).unwrap(), sym("a1"));
    assert_eq!(w.request("S", "read", &[Value::Int(2)]).unwrap(), Value::Field(9));
    let hist = w.request("S", "getHist", &[]).unwrap();
    let expected = Value::List(vec![
        Value::List(vec![Value::Int(0), sym("init")]),
        Value::List(vec![Value::Int(0), sym("R"), Value::Int(2)]),
        Value::List(vec![Value::Int(0), sym("W"), Value::Int(2), Value::Field(9)]),
        Value::List(vec![sym("query"), sym("q1")]),
        Value::List(vec![sym("answer"), sym("a1")]),
    ]);
    assert_eq!(hist, expected);
}

#[test]
fn db_argument_checks() {
    let mut w = db_world();
    w.request("C0", "init", &[cells(&[1, 2])]).unwrap();
    w.request("C0", "init", &[cells(&[1, 2, 300])]).unwrap();
    assert_eq!(w.request("S", "read", &[Value::Int(1)]).unwrap(), Value::Absent);
    assert!(matches!(w.request("S", "read", &[Value::Int(4)]), Err(CoreError::IndexOutOfRange { index: 4, n: 3 })));
    w.request("C0", "init", &[cells(&[1, 2, 3])]).unwrap();
    w.request("C0", "init", &[cells(&[4, 4, 4])]).unwrap();
    assert_eq!(w.request("S", "read", &[Value::Int(1)]).unwrap(), Value::Field(1));
    assert_eq!(w.request("S", "getHist", &[]).unwrap().as_list().unwrap().len(), 1);
}

#[test]
fn private_db_hides_payloads() {
    let mut w = World::new(1).with(Box::new(PrivDb::new(3, 257))).unwrap();
    w.request("C0", "init", &[cells(&[5, 6, 7])]).unwrap();
    w.request("C0", "initComplete", &[]).unwrap();
    assert!(w.request("C", "query", &[Value::Int(0)]).is_err());
    w.request("C", "query", &[Value::Int(3)]).unwrap();
    assert_eq!(w.request("S", "getQuery", &[]).unwrap(), sym(OK));
    w.request("S", "answer", &[]).unwrap();
    assert_eq!(w.request("C", "reconstruct", &[]).unwrap(), Value::Field(7));
    let hist = w.request("S", "getHist", &[]).unwrap();
    assert_eq!(
        hist,
        Value::List(vec![
            Value::List(vec![Value::Int(0), sym("init")]),
            Value::List(vec![sym("query")]),
            Value::List(vec![sym("answer")]),
        ])
    );
}

#[test]
fn coalition_limits() {
    let mut w = World::new(1).with(Box::new(MultDb::basic(2, 257, 3, 1, Some(1)).unwrap())).unwrap();
    w.request("W", "formCoalition", &[Value::Bools(vec![true, true, false])]).unwrap();
    w.request("C0", "init", &[cells(&[1, 2])]).unwrap();
    assert_eq!(w.request("S.1", "getHist", &[]).unwrap(), Value::Absent);
    w.request("W", "formCoalition", &[Value::Bools(vec![false, true, false])]).unwrap();
    assert!(w.request("S.2", "getHist", &[]).unwrap().as_list().is_some());
    assert_eq!(w.request("S.1", "getHist", &[]).unwrap(), Value::Absent);
    // Already formed.
    w.request("W", "formCoalition", &[Value::Bools(vec![true, false, false])]).unwrap();
    assert_eq!(w.request("S.1", "getHist", &[]).unwrap(), Value::Absent);
    // Reads are open to every server of the basic resource.
    assert_eq!(w.request("S.3", "read", &[Value::Int(2)]).unwrap(), Value::Field(2));
}

#[test]
fn byzantine_designation() {
    let mut w = World::new(1).with(Box::new(MultDb::private(2, 257, 3, 1, Some(1)).unwrap())).unwrap();
    w.request("W", "formByzantines", &[Value::Bools(vec![false, false, true])]).unwrap();
    w.request("W", "formCoalition", &[Value::Bools(vec![false, false, true])]).unwrap();
    w.request("C0", "init", &[cells(&[1, 2])]).unwrap();
    w.request("C0", "initComplete", &[]).unwrap();
    w.request("C", "query", &[Value::Int(2)]).unwrap();
    w.request("S.1", "badAnswer", &[]).unwrap();
    w.request("S.3", "badAnswer", &[]).unwrap();
    w.request("S.3", "answer", &[]).unwrap();
    let h = w.request("S.3", "getHist", &[]).unwrap();
    let last = h.as_list().unwrap().last().unwrap().clone();
    assert_eq!(last, Value::List(vec![sym("answer"), Value::Int(3), sym(EPS)]));
    assert_eq!(w.request("C", "reconstruct", &[]).unwrap(), Value::Absent);
    w.request("S.1", "answer", &[]).unwrap();
    w.request("S.2", "answer", &[]).unwrap();
    assert_eq!(w.request("C", "reconstruct", &[]).unwrap(), Value::Field(2));
    // Private reads are gated on coalition membership.
    assert_eq!(w.request("S.1", "read", &[Value::Int(1)]).unwrap(), Value::Absent);
    assert_eq!(w.request("S.3", "read", &[Value::Int(1)]).unwrap(), Value::Field(1));
}
