// Page bootstrap: wires the socket, the input loop, and the render loop
// together. All state lives in the HUD reducer; this file is plumbing.

import { CockpitSocket } from "./net.js";
import { initialHud, reduce, type HudState } from "./hud.js";
import { InputSource } from "./input.js";
import { InputSender } from "./sender.js";
import { drawCockpit, type WorldGeom } from "./render.js";
import { fitViewport } from "./transform.js";
import { helloMsg, startMsg, abortMsg, trainMsg, PARADIGMS, type Paradigm } from "./protocol.js";

// Display geometry of the stock world served by the cockpit service. The
// server remains the only simulator; these numbers only place the border
// and the goal circle on screen.
const GEOM: WorldGeom = { W: 20, H: 13.33, goalX: 10, goalY: 6, goalR: 0.5 };

const $ = (id: string) => document.getElementById(id)!;

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

export function boot() {
  const canvas = $("cockpit") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const paradigmSel = $("paradigm") as HTMLSelectElement;
  const modelSel = $("model") as HTMLSelectElement;
  const nameBox = $("pilot-name") as HTMLInputElement;
  const overlay = $("overlay");

  PARADIGMS.forEach((p) => paradigmSel.add(new Option(p, p)));

  let hud: HudState = initialHud();
  const apply = (ev: Parameters<typeof reduce>[1]) => {
    hud = reduce(hud, ev);
  };

  const socket = new CockpitSocket(wsUrl(), {
    onFrame(frame) {
      apply({ kind: "frame", frame });
      if (frame.type === "trial_end") sender.stop();
      if (frame.type === "model_ready") refreshModels();
    },
    onConnection(state) {
      apply({ kind: "connection", state });
      overlay.style.display = state === "open" ? "none" : "flex";
      if (state === "open") {
        socket.send(helloMsg(nameBox.value || "anonymous"));
      } else {
        sender.stop();
      }
    },
  });

  const source = new InputSource(() => {
    const pads = navigator.getGamepads ? navigator.getGamepads() : [];
    for (const pad of pads) if (pad && pad.connected) return pad.axes;
    return null;
  });
  const sender = new InputSender(
    (text) => socket.send(text),
    (now) => source.sample(now),
  );

  window.addEventListener("keydown", (e) => {
    if (source.keyboard.handles(e.code)) {
      source.keyboard.keyDown(e.code);
      e.preventDefault();
    }
  });
  window.addEventListener("keyup", (e) => {
    if (source.keyboard.handles(e.code)) {
      source.keyboard.keyUp(e.code);
      e.preventDefault();
    }
  });
  window.addEventListener("blur", () => {
    source.setFocus(false);
    sender.sendZero();
  });
  window.addEventListener("focus", () => source.setFocus(true));

  $("start").addEventListener("click", () => {
    const paradigm = paradigmSel.value as Paradigm;
    const modelId = modelSel.value || undefined;
    socket.send(helloMsg(nameBox.value || "anonymous"));
    socket.send(startMsg(paradigm, paradigm === "user_only" ? {} : { modelId }));
    apply({ kind: "started", paradigm });
    sender.start();
  });
  $("abort").addEventListener("click", () => {
    socket.send(abortMsg());
    sender.stop();
  });
  $("train").addEventListener("click", async () => {
    // the service names sessions; find ours by name among the live ones
    const name = nameBox.value || "anonymous";
    const sessions = await fetch("/api/sessions").then((r) => r.json());
    const mine = sessions.filter((s: any) => s.connected && s.name === name);
    if (mine.length > 0) {
      socket.send(trainMsg(mine.map((s: any) => s.session_id)));
    }
  });
  $("reconnect").addEventListener("click", () => socket.reconnectNow());

  async function refreshModels() {
    const models = await fetch("/api/models").then((r) => r.json());
    const keep = modelSel.value;
    modelSel.innerHTML = "";
    modelSel.add(new Option("(no model)", ""));
    for (const m of models) modelSel.add(new Option(m.model_id, m.model_id));
    modelSel.value = [...modelSel.options].some((o) => o.value === keep) ? keep : "";
  }

  function resize() {
    canvas.width = canvas.clientWidth;
    canvas.height = canvas.clientHeight;
  }
  window.addEventListener("resize", resize);
  resize();

  function renderLoop() {
    const vp = fitViewport(GEOM.W, GEOM.H, canvas.width, canvas.height);
    drawCockpit(ctx, hud, vp, GEOM);
    requestAnimationFrame(renderLoop);
  }

  refreshModels();
  socket.connect();
  requestAnimationFrame(renderLoop);
}

boot();
