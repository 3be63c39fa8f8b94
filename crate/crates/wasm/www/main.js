import init, { solve, morse, break_search } from "./pkg/symlab_wasm.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

function call(fn, ...args) {
  const out = JSON.parse(fn(...args));
  if (out.error) throw new Error(out.error);
  return out;
}

function show(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "err" : "";
}

// curves: [{t, u, color, label}]
function plotCurves(canvas, curves) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  let lo = Infinity, hi = -Infinity;
  for (const c of curves) for (const v of c.u) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (hi - lo < 1e-12) { lo -= 1; hi += 1; }
  const pad = 0.08 * (hi - lo);
  lo -= pad; hi += pad;
  const x = (t) => 40 + (w - 50) * t / (2 * Math.PI);
  const y = (v) => h - 20 - (h - 30) * (v - lo) / (hi - lo);

  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(x(0), y(0)); ctx.lineTo(x(2 * Math.PI), y(0));
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(hi.toPrecision(3), 2, 12);
  ctx.fillText(lo.toPrecision(3), 2, h - 22);
  ctx.fillText("2π", w - 20, h - 5);

  curves.forEach((c, i) => {
    ctx.strokeStyle = c.color || COLORS[i % COLORS.length];
    ctx.beginPath();
    c.t.forEach((t, k) => (k ? ctx.lineTo(x(t), y(c.u[k])) : ctx.moveTo(x(t), y(c.u[k]))));
    ctx.lineTo(x(2 * Math.PI), y(c.u[0]));
    ctx.stroke();
    if (c.label) {
      ctx.fillStyle = ctx.strokeStyle;
      ctx.fillText(c.label, w - 160, 14 + 13 * i);
    }
  });
}

function runSolve() {
  try {
    const r = call(solve, $("solve-config").value);
    plotCurves($("solve-plot"), [{ ...r.curve, label: "u(t)" }]);
    const ratios = (r.step_ratios || []).slice(0, 8).map((x) => x.toFixed(3)).join(", ");
    show("solve-out",
      `${r.summary}\ng' range [${r.derivative_range.q.toFixed(4)}, ${r.derivative_range.p.toFixed(4)}]` +
      (r.kappa != null ? `\nκ = ${r.kappa.toFixed(6)}; first step ratios: ${ratios}` : ""));
  } catch (e) {
    show("solve-out", e.message, true);
  }
}

function runMorse() {
  const c = parseFloat($("m-c").value);
  $("m-c-val").textContent = c.toFixed(2);
  try {
    const r = call(morse, c, parseFloat($("m-a").value) || 0, parseInt($("m-k").value) || 0,
      parseInt($("m-s").value) || 2, parseInt($("m-j").value) || 16);
    const canvas = $("morse-plot");
    const ctx = canvas.getContext("2d");
    const { width: w, height: h } = canvas;
    ctx.clearRect(0, 0, w, h);
    const ev = r.eigenvalues.slice(0, 40);
    const top = Math.max(...ev.map(Math.abs), 1);
    const bw = (w - 20) / Math.max(ev.length, 1);
    const zero = h / 2;
    ev.forEach((e, i) => {
      ctx.fillStyle = e < 0 ? "#d62728" : "#1f77b4";
      const bh = (h / 2 - 10) * e / top;
      ctx.fillRect(10 + i * bw + 1, zero - Math.max(bh, 0), bw - 2, Math.abs(bh));
    });
    ctx.strokeStyle = "#999";
    ctx.beginPath(); ctx.moveTo(0, zero); ctx.lineTo(w, zero); ctx.stroke();
    show("morse-out",
      `index ${r.index} on ${r.basis_dim} basis functions; relative margin ${r.relative_margin.toExponential(2)}` +
      (r.degenerate ? " (degenerate)" : "") + `\nsmallest eigenvalues: ${ev.slice(0, 8).map((x) => x.toFixed(4)).join(", ")}`);
  } catch (e) {
    show("morse-out", e.message, true);
  }
}

function runBreak() {
  show("break-out", "searching…");
  setTimeout(() => {
    try {
      const r = call(break_search, $("break-config").value);
      const curves = [
        { ...r.fhat, color: "#aaa", label: "f̂" },
        { ...r.u_star, color: "#000", label: "u*" },
        ...r.classes.map((c, i) => ({
          ...c.curve,
          color: COLORS[(i + 1) % COLORS.length],
          label: `class ${c.id}${c.asymmetric ? " (asym)" : ""}`,
        })),
      ];
      plotCurves($("break-plot"), curves);
      const lines = r.classes.map((c) =>
        `class ${c.id}: ${c.members} member(s), relative defect ${c.relative_defect.toExponential(3)}${c.asymmetric ? "  asymmetric" : ""}`);
      show("break-out", `${r.summary}\n${lines.join("\n")}`);
    } catch (e) {
      show("break-out", e.message, true);
    }
  }, 10);
}

await init();
$("status").textContent = "ready";
$("solve-run").onclick = runSolve;
$("break-run").onclick = runBreak;
for (const id of ["m-c", "m-a", "m-k", "m-s", "m-j"]) $(id).oninput = runMorse;
runSolve();
runMorse();
