import init, { bulk_histogram, edge_histogram, airy_curves } from "./pkg/betatrace_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function rows(flat, width) {
  const out = [];
  for (let i = 0; i < flat.length; i += width) out.push(Array.from(flat.slice(i, i + width)));
  return out;
}

// bars: [{lo, hi, h}], lines: [{label, pts: [[x, y]]}]
function plot(canvas, bars, lines) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 36;
  ctx.clearRect(0, 0, W, H);
  const xs = bars.flatMap(b => [b.lo, b.hi]).concat(lines.flatMap(l => l.pts.map(p => p[0])));
  const ys = bars.map(b => b.h).concat(lines.flatMap(l => l.pts.map(p => p[1]))).filter(Number.isFinite);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y0 = Math.min(0, ...ys), y1 = Math.max(...ys) * 1.08 || 1;
  const sx = x => pad + (x - x0) / (x1 - x0) * (W - 2 * pad);
  const sy = y => H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, sy(0)); ctx.lineTo(W - pad, sy(0));
  ctx.moveTo(pad, pad); ctx.lineTo(pad, H - pad);
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toFixed(2), pad, H - pad + 14);
  ctx.fillText(x1.toFixed(2), W - pad - 24, H - pad + 14);
  ctx.fillText(y1.toFixed(3), 2, pad + 4);

  ctx.fillStyle = "rgba(120, 120, 120, 0.35)";
  for (const b of bars) ctx.fillRect(sx(b.lo), sy(b.h), sx(b.hi) - sx(b.lo) - 1, sy(y0) - sy(b.h));

  lines.forEach((l, k) => {
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.lineWidth = 2;
    ctx.beginPath();
    let on = false;
    for (const [x, y] of l.pts) {
      if (!Number.isFinite(y)) { on = false; continue; }
      on ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y));
      on = true;
    }
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(l.label, W - pad - 120, pad + 14 * k);
  });
  ctx.lineWidth = 1;
}

function form(id) {
  const root = document.getElementById(id);
  const val = name => {
    const el = root.querySelector(`[name=${name}]`);
    return el.type === "checkbox" ? el.checked : Number(el.value);
  };
  const status = root.querySelector(".status");
  const run = job => {
    status.className = "status";
    status.textContent = "running...";
    // let the status repaint before the synchronous wasm call
    setTimeout(() => {
      const t = performance.now();
      try {
        const note = job(val, root.querySelector("canvas"));
        status.textContent = `${note} (${((performance.now() - t) / 1000).toFixed(2)}s)`;
      } catch (e) {
        status.className = "status err";
        status.textContent = e.message ?? String(e);
      }
    }, 10);
  };
  root.querySelector("button").addEventListener("click", () => run(root.job));
  return root;
}

function histogram(sample, refLabel) {
  return (val, canvas) => {
    const r = rows(sample(val("n"), val("beta"), val("fixed"), val("reps"), val("seed"), 40), 5);
    const bars = r.map(([lo, hi, h]) => ({ lo, hi, h }));
    const ref = r.map(([lo, hi, , , f]) => [(lo + hi) / 2, f]);
    const lines = ref.some(p => Number.isFinite(p[1])) ? [{ label: refLabel, pts: ref }] : [];
    plot(canvas, bars, lines);
    const mass = r.reduce((s, [lo, hi, h]) => s + h * (hi - lo), 0);
    return `${r.length} bins, in-grid mass ${mass.toFixed(4)}` + (lines.length ? "" : ", no closed-form reference for this beta");
  };
}

await init();

const bulk = form("bulk");
bulk.job = histogram(bulk_histogram, "semicircle");
const edge = form("edge");
edge.job = histogram(edge_histogram, "Ai_beta");
const airy = form("airy");
airy.job = (val, canvas) => {
  const r = rows(airy_curves(val("lo"), val("hi"), 400), 6);
  const col = k => r.map(row => [row[0], row[k]]);
  plot(canvas, [], [
    { label: "Ai", pts: col(1) },
    { label: "Ai_1", pts: col(3) },
    { label: "Ai_2", pts: col(4) },
    { label: "Ai_4", pts: col(5) },
  ]);
  return `${r.length} points`;
};

for (const f of [bulk, edge, airy]) f.querySelector("button").click();
