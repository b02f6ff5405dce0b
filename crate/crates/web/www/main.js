import init, { hzero, hull, log_concavity } from "./pkg/arith_okounkov_web.js";

function field(set, name) {
  return Number(set.querySelector(`input[name=${name}]`).value);
}

function wire(id, compute) {
  const set = document.getElementById(id);
  const out = set.querySelector("pre");
  set.querySelector("button").addEventListener("click", () => {
    out.classList.remove("err");
    try {
      compute(set, out);
    } catch (e) {
      out.classList.add("err");
      out.textContent = e.message ?? String(e);
    }
  });
}

await init();

wire("hzero", (set, out) => {
  const r = JSON.parse(hzero(field(set, "degree"), field(set, "cnum"), field(set, "cden"), field(set, "m")));
  const count = r.count === null ? "out of enumeration scope" : r.count;
  out.textContent = `rank ${r.rank}\n#Ĥ⁰ = ${count}\nĥ⁰ ∈ [${r.lo}, ${r.hi}]`;
});

wire("hull", (set, out) => {
  const r = JSON.parse(hull(field(set, "cnum"), field(set, "cden"), field(set, "p"), field(set, "alpha"), field(set, "m")));
  out.textContent = `points ${r.points} (undecided ${r.unknown})\nvolume ${r.volume}\nvolume · log p = ${r.volume_times_logp}`;
  set.querySelector(".svg").innerHTML = r.svg;
});

wire("concavity", (set, out) => {
  const r = JSON.parse(log_concavity(
    field(set, "a1"), field(set, "c1num"), field(set, "c1den"),
    field(set, "a2"), field(set, "c2num"), field(set, "c2den"),
  ));
  out.textContent = `vol₁ = ${r.vol1}, vol₂ = ${r.vol2}, vol(sum) = ${r.vol_sum}\n`
    + `${r.lhs} ≥ ${r.rhs}: ${r.holds}${r.exact ? " (exact)" : ""}`;
});
