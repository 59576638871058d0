import init, { curves, simulate, tomography } from "./pkg/tetrakey_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (x, d = 4) => (x === null || x === undefined ? "–" : x.toFixed(d));

function fail(target, err) {
  target.innerHTML = "";
  const p = document.createElement("p");
  p.className = "error";
  p.textContent = String(err.message ?? err);
  target.appendChild(p);
}

function table(headers, rows) {
  const t = document.createElement("table");
  const head = t.insertRow();
  for (const h of headers) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  for (const r of rows) {
    const tr = t.insertRow();
    for (const cell of r) tr.insertCell().textContent = cell;
  }
  return t;
}

function plotCurves() {
  const note = $("curve-note");
  let data;
  try {
    data = JSON.parse(curves(num("curve-points")));
  } catch (e) {
    return fail(note, e);
  }
  const canvas = $("curve-canvas");
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 44;
  const xmax = 2 / 3, ymax = 0.9;
  const X = (e) => pad + (e / xmax) * (W - 2 * pad);
  const Y = (v) => H - pad - (v / ymax) * (H - 2 * pad);
  ctx.clearRect(0, 0, W, H);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, H - pad);
  ctx.lineTo(W - pad / 2, H - pad);
  ctx.stroke();
  for (let e = 0; e <= 0.6001; e += 0.1) {
    ctx.fillText(e.toFixed(1), X(e) - 8, H - pad + 16);
  }
  for (let v = 0; v <= 0.8001; v += 0.2) {
    ctx.fillText(v.toFixed(1), 8, Y(v) + 4);
  }
  ctx.fillText("ε", W - pad, H - pad + 30);

  const series = [
    ["iab_tetra", "#1f77b4"],
    ["iab_six", "#2ca02c"],
    ["iae_tetra", "#d62728"],
    ["chi", "#9467bd"],
  ];
  for (const [key, color] of series) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    data.rows.forEach((r, i) => {
      const y = Y(Math.min(r[key], ymax));
      i === 0 ? ctx.moveTo(X(r.epsilon), y) : ctx.lineTo(X(r.epsilon), y);
    });
    ctx.stroke();
  }
  ctx.lineWidth = 1;
  ctx.setLineDash([4, 4]);
  ctx.strokeStyle = "#555";
  for (const e of [data.ck_threshold, data.holevo_threshold_tetra]) {
    ctx.beginPath();
    ctx.moveTo(X(e), pad / 2);
    ctx.lineTo(X(e), H - pad);
    ctx.stroke();
  }
  ctx.setLineDash([]);
  note.textContent =
    `I_AB = I_AE at ε = ${fmt(data.ck_threshold, 5)}; ` +
    `one-way Holevo bound meets I_AB at ε = ${fmt(data.holevo_threshold_tetra, 5)}.`;
}

function runSimulation() {
  const out = $("sim-out");
  let r;
  try {
    r = JSON.parse(simulate(num("sim-eps"), num("sim-pairs"), num("sim-rounds"), $("sim-fp").checked, BigInt(num("sim-seed"))));
  } catch (e) {
    return fail(out, e);
  }
  out.innerHTML = "";
  const p = document.createElement("p");
  p.textContent =
    `${r.total_bits} key bits, efficiency ${fmt(r.efficiency)} (ideal ${fmt(r.ideal_efficiency)}), ` +
    `${r.bit_errors} bit errors before error correction.`;
  out.appendChild(p);
  out.appendChild(
    table(
      ["round", "bits", "error rate", "predicted"],
      r.rounds.map((x) => [x.round, x.bits, fmt(x.error_rate, 5), fmt(x.predicted_error_rate, 5)]),
    ),
  );
  const key = document.createElement("p");
  key.innerHTML = `first key bits: <code>${r.key_preview}</code>`;
  out.appendChild(key);
}

function runTomography() {
  const out = $("tomo-out");
  let r;
  try {
    r = JSON.parse(tomography(num("tomo-eps"), num("tomo-pairs"), num("tomo-max"), BigInt(num("tomo-seed"))));
  } catch (e) {
    return fail(out, e);
  }
  out.innerHTML = "";
  const letters = ["A", "B", "C", "D"];
  out.appendChild(
    table(
      ["", ...letters],
      letters.map((a, i) => [a, ...letters.map((_, j) => fmt(r.frequencies[4 * i + j], 4))]),
    ),
  );
  const p = document.createElement("p");
  p.textContent =
    `ε̂ = ${fmt(r.epsilon_hat)}, distance ${fmt(r.distance)} (bound ${fmt(r.distance_bound)}), ` +
    `verdict: ${r.verdict}. Reconstructed state: smallest eigenvalue ${fmt(r.min_eigenvalue)}, ` +
    `trace distance to the source ${fmt(r.distance_to_source)}.`;
  out.appendChild(p);
}

await init();
$("curve-run").onclick = plotCurves;
$("sim-run").onclick = runSimulation;
$("tomo-run").onclick = runTomography;
plotCurves();
