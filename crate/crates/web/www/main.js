import init, { critical_supply_radius, threshold_curve, stationary, simulate } from "./pkg/angiodelay_web.js";

const COLORS = ["#1f6feb", "#d1242f", "#1a7f37", "#8250df"];

const num = (id) => parseFloat(document.getElementById(id).value);

// Line plot of several series [{x, y, label}] with optional log x axis.
function plot(canvas, series, { logX = false, xLabel = "", hline = null } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 48;
  ctx.clearRect(0, 0, W, H);
  const fx = logX ? Math.log10 : (v) => v;
  const xs = series.flatMap((s) => s.x.map(fx));
  const ys = series.flatMap((s) => s.y).filter(Number.isFinite);
  if (hline !== null) ys.push(hline);
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  if (x0 === x1) { x0 -= 1; x1 += 1; }
  const px = (v) => pad + ((fx(v) - x0) / (x1 - x0)) * (W - 2 * pad);
  const py = (v) => H - pad + ((y0 - v) / (y1 - y0)) * (H - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  const fmt = (v) => Math.abs(v) >= 1e3 || (Math.abs(v) < 1e-2 && v !== 0) ? v.toExponential(1) : v.toPrecision(3);
  ctx.fillText(fmt(y1), 4, pad + 4);
  ctx.fillText(fmt(y0), 4, H - pad);
  ctx.fillText(fmt(logX ? 10 ** x0 : x0), pad, H - pad + 16);
  ctx.fillText(fmt(logX ? 10 ** x1 : x1), W - pad - 30, H - pad + 16);
  ctx.fillText(xLabel, W / 2 - 20, H - 8);

  if (hline !== null) {
    ctx.setLineDash([4, 4]);
    ctx.strokeStyle = "#888";
    ctx.beginPath();
    ctx.moveTo(pad, py(hline));
    ctx.lineTo(W - pad, py(hline));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  series.forEach((s, k) => {
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    s.x.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(s.label, W - pad - 150, pad + 16 * (k + 1));
  });
}

function report(id, text, isError = false) {
  const el = document.getElementById(id);
  el.textContent = text;
  el.classList.toggle("err", isError);
}

// Splits interleaved [a, b, a, b, ...] into two arrays.
function unzip(flat) {
  const a = [], b = [];
  for (let i = 0; i < flat.length; i += 2) { a.push(flat[i]); b.push(flat[i + 1]); }
  return [a, b];
}

function runThreshold() {
  try {
    const r0 = num("th-r0");
    const [alpha, mu] = unzip(threshold_curve(r0, num("th-sb"), num("th-amin"), num("th-amax"), 200));
    plot(document.getElementById("th-plot"), [{ x: alpha, y: mu, label: "threshold" }], { logX: true, xLabel: "supply rate" });
    const rc = critical_supply_radius();
    const trend = mu[mu.length - 1] < mu[0] ? "falls" : "rises";
    report("th-out", `critical radius ${rc.toFixed(6)}; at radius ${r0} the threshold ${trend} with supply`);
  } catch (e) {
    report("th-out", String(e), true);
  }
}

function runProfiles() {
  try {
    const s = stationary(num("st-a"), num("st-sb"), num("st-st"), num("st-mu"));
    const r = Array.from(s.nodes());
    plot(document.getElementById("st-plot"), [
      { x: r, y: Array.from(s.nutrient()), label: "nutrient" },
      { x: r, y: Array.from(s.pressure()), label: "pressure" },
      { x: r, y: Array.from(s.nutrient_correction()), label: "nutrient, delay term" },
    ], { xLabel: "r" });
    report("st-out", `stationary radius ${s.r0().toFixed(6)}, first-order delay shift ${s.r1().toExponential(4)}`);
    s.free();
  } catch (e) {
    report("st-out", String(e), true);
  }
}

function runSimulation() {
  const btn = document.getElementById("sim-go");
  btn.disabled = true;
  report("sim-out", "running...");
  // let the status line paint before the solver blocks the thread
  setTimeout(() => {
    try {
      const tau = num("sim-tau");
      // delayed steps are costly; the coarsest stable step keeps the page usable
      const dt = tau > 0 ? Math.min(0.05, tau / 4) : 0.01;
      const base = stationary(num("sim-a"), 1, 0.5, num("sim-mu"));
      const r0 = base.r0();
      base.free();
      const t0 = performance.now();
      const [t, radius] = unzip(simulate(num("sim-a"), 1, 0.5, num("sim-mu"), tau, num("sim-f"), num("sim-t"), dt));
      const ms = performance.now() - t0;
      plot(document.getElementById("sim-plot"), [{ x: t, y: radius, label: "radius" }], { xLabel: "t", hline: r0 });
      report("sim-out", `${t.length - 1} steps in ${ms.toFixed(0)} ms; final radius ${radius[radius.length - 1].toFixed(6)}, undelayed stationary ${r0.toFixed(6)} (dashed)`);
    } catch (e) {
      report("sim-out", String(e), true);
    }
    btn.disabled = false;
  }, 10);
}

await init();
document.getElementById("th-go").onclick = runThreshold;
document.getElementById("st-go").onclick = runProfiles;
document.getElementById("sim-go").onclick = runSimulation;
runThreshold();
runProfiles();
