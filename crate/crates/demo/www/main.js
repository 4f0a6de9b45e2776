import init, { torus_image, certify_summary, combine_loops } from "./pkg/fupcon_demo.js";

const $ = (id) => document.getElementById(id);

function show(el, text, isError) {
  el.textContent = text;
  el.className = isError ? "err" : "";
}

function draw(data) {
  const canvas = $("torus");
  const ctx = canvas.getContext("2d");
  const size = canvas.width;
  ctx.clearRect(0, 0, size, size);

  ctx.strokeStyle = "#ddd";
  ctx.lineWidth = 1;
  for (let k = 1; k < 6; k++) {
    const x = (k * size) / 6;
    ctx.beginPath(); ctx.moveTo(x, 0); ctx.lineTo(x, size); ctx.stroke();
    ctx.beginPath(); ctx.moveTo(0, x); ctx.lineTo(size, x); ctx.stroke();
  }

  // y grows upward on the torus
  const px = (x, y) => [x * size, (1 - y) * size];
  ctx.strokeStyle = "#1f5fbf";
  ctx.lineWidth = 2;
  for (const [x0, y0, x1, y1] of data.pieces) {
    ctx.beginPath();
    ctx.moveTo(...px(x0, y0));
    ctx.lineTo(...px(x1, y1));
    ctx.stroke();
  }
  ctx.fillStyle = "#c03";
  for (const [x, y] of data.points) {
    const [u, v] = px(x, y);
    ctx.beginPath(); ctx.arc(u, v, 3, 0, 2 * Math.PI); ctx.fill();
  }
  const [bx, by] = px(0, 0);
  ctx.fillStyle = "#000";
  ctx.beginPath(); ctx.arc(bx + 4, by - 4, 4, 0, 2 * Math.PI); ctx.fill();
}

function onDraw() {
  const info = $("img-info");
  try {
    const json = torus_image($("img-moduli").value, $("img-winding").value,
                             Number($("img-stage").value), $("img-pre").checked);
    const data = JSON.parse(json);
    draw(data);
    show(info, `${data.arcs} arcs, ${data.components} component(s)`, false);
  } catch (e) {
    show(info, String(e), true);
  }
}

function onCertify() {
  try {
    show($("cert-out"), certify_summary($("img-moduli").value, $("img-winding").value,
                                        Number($("cert-from").value), Number($("cert-to").value)), false);
  } catch (e) {
    show($("cert-out"), String(e), true);
  }
}

function onCombine() {
  try {
    show($("comb-out"), combine_loops($("comb-loops").value), false);
  } catch (e) {
    show($("comb-out"), String(e), true);
  }
}

await init();
$("img-go").addEventListener("click", onDraw);
$("cert-go").addEventListener("click", onCertify);
$("comb-go").addEventListener("click", onCombine);
onDraw();
