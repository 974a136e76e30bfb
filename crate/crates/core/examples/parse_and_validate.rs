//! Parse a small flowsheet, print its nodes, then show what validation
//! reports for a broken one.

use massflow::topology::{parse_topology, serialize};
use massflow::Error;

const PLANT: &str = "
[components]
id=A
id=B

[nodes]
id=feed kind=Source out=f composition=A:0.6,B:0.4 flow=10
id=mix kind=Mixer in=f,r out=m
id=sep kind=ComponentSeparator in=m out=top,r alpha=\"A:0.9,B:0.2;A:0.1,B:0.8\"
id=prod kind=Sink in=top

[streams]
id=f from=feed to=mix
id=m from=mix to=sep
id=top from=sep to=prod
id=r from=sep to=mix
";

fn main() {
    let t = parse_topology(PLANT).expect("valid plant");
    for n in &t.nodes {
        println!(
            "{:<5} {:<18} in={:?} out={:?}",
            n.id,
            n.kind.name(),
            n.inlets,
            n.outlets
        );
    }
    println!("\n{}", serialize(&t));

    let broken = PLANT.replace("id=r from=sep to=mix", "id=r from=sep to=nowhere");
    match parse_topology(&broken) {
        Err(Error::Invalid(diags)) => diags.iter().for_each(|d| println!("{d}")),
        other => println!("unexpected: {other:?}"),
    }
}
