import init, { solve_chain, rollout_chain, dialogue_monitor } from "./pkg/hai_safety_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function call(f, out) {
  try {
    return JSON.parse(f());
  } catch (e) {
    out.innerHTML = `<p class="error">${e}</p>`;
    return null;
  }
}

function axes(ctx, w, h, lo, hi) {
  ctx.clearRect(0, 0, w, h);
  const y = (v) => h - 20 - ((v - lo) / (hi - lo || 1)) * (h - 40);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(30, y(0));
  ctx.lineTo(w - 10, y(0));
  ctx.stroke();
  ctx.fillStyle = "#666";
  ctx.fillText("0", 10, y(0) + 4);
  return y;
}

function drawValues(sol) {
  const c = $("values"), ctx = c.getContext("2d");
  const all = sol.values.concat(sol.margin);
  const y = axes(ctx, c.width, c.height, Math.min(...all), Math.max(...all));
  const step = (c.width - 60) / sol.values.length;
  sol.values.forEach((v, z) => {
    const x = 40 + z * step;
    ctx.fillStyle = sol.safe_set.includes(z) ? "#6b6" : "#d66";
    ctx.fillRect(x, Math.min(y(v), y(0)), step * 0.4, Math.abs(y(v) - y(0)));
    ctx.fillStyle = "#88a";
    const m = sol.margin[z];
    ctx.fillRect(x + step * 0.45, Math.min(y(m), y(0)), step * 0.2, Math.abs(y(m) - y(0)));
    ctx.fillStyle = "#333";
    ctx.fillText(String(z), x, c.height - 4);
  });
}

function solve() {
  const out = $("solve-out");
  const sol = call(() => solve_chain(num("n"), num("reach")), out);
  if (!sol) return;
  drawValues(sol);
  out.innerHTML = `<p>Safe set: {${sol.safe_set.join(", ")}} after ${sol.iterations} sweeps.
    Green/red bars are the value, blue bars the margin. Fallback per gap: ${sol.fallback.join(" ")}</p>`;
}

function run() {
  const out = $("run-out");
  const reach = num("reach");
  const ep = call(() => rollout_chain(num("n"), reach, Math.max(reach, num("action-reach")), num("z0"),
    $("task").value, $("human").value, $("filter").value, num("steps"), BigInt(num("seed"))), out);
  if (!ep) return;
  const c = $("trace"), ctx = c.getContext("2d");
  const zs = ep.steps.map((s) => s.z).concat([ep.final_state]);
  const y = axes(ctx, c.width, c.height, 0, num("n"));
  const dx = (c.width - 60) / Math.max(1, zs.length - 1);
  ctx.strokeStyle = "#336";
  ctx.beginPath();
  zs.forEach((z, t) => (t ? ctx.lineTo(40 + t * dx, y(z)) : ctx.moveTo(40, y(z))));
  ctx.stroke();
  ep.steps.forEach((s, t) => {
    ctx.fillStyle = s.off_odd ? "#e80" : s.intervened ? "#c33" : "#3a3";
    ctx.beginPath();
    ctx.arc(40 + t * dx, y(s.z), 4, 0, 2 * Math.PI);
    ctx.fill();
  });
  out.innerHTML = `<p>violations ${ep.violations}, min margin ${ep.min_margin},
    intervention rate ${ep.intervention_rate.toFixed(2)}. Red dots: filter intervened; orange: human left the bound.</p>`;
}

function dialogue() {
  const out = $("dialogue-out");
  const t = call(() => dialogue_monitor($("normative").checked), out);
  if (!t) return;
  const cls = (v) => (v > 0 ? "good" : v < 0 ? "bad" : "edge");
  const rows = t.states.map((s, z) =>
    `<tr><th>${s}</th><td class="${cls(t.values[z])}">${t.values[z]}</td>` +
    t.monitor[z].map((m) => `<td class="${cls(m)}">${m}</td>`).join("") +
    `<td>${t.fallback[z]}</td></tr>`).join("");
  out.innerHTML = `<table><tr><th>state</th><th>value</th>${t.actions.map((a) => `<th>${a}</th>`).join("")}<th>fallback</th></tr>${rows}</table>
    <p>An action passes the filter where its monitor is positive.</p>`;
}

await init();
$("solve").onclick = solve;
$("run").onclick = run;
$("normative").onchange = dialogue;
solve();
run();
dialogue();
