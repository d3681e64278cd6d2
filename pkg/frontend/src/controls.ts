/** Run controls and the human chat input box. */
import type { GatewaySocket } from "./socket.js";
import type { SessionStore } from "./store.js";

export class Controls {
  private senderSelect: HTMLSelectElement;
  private input: HTMLInputElement;
  private statusEl: HTMLElement;
  private pauseButton: HTMLButtonElement;

  constructor(
    container: HTMLElement,
    private readonly store: SessionStore,
    private readonly socket: GatewaySocket,
  ) {
    this.statusEl = document.createElement("div");
    this.statusEl.className = "status-line";
    container.appendChild(this.statusEl);

    const bar = document.createElement("div");
    bar.className = "control-bar";
    this.pauseButton = this.button(bar, "Pause", () => this.togglePause());
    this.button(bar, "Step 1", () => socket.send({ kind: "step", n: 1 }));
    this.button(bar, "Step 3", () => socket.send({ kind: "step", n: 3 }));
    const speed = document.createElement("select");
    for (const value of ["0.5", "1", "2", "5", "10"]) {
      const opt = document.createElement("option");
      opt.value = value;
      opt.textContent = `${value}x`;
      if (value === "1") opt.selected = true;
      speed.appendChild(opt);
    }
    speed.onchange = () => socket.send({ kind: "set_speed", speed: Number(speed.value) });
    bar.appendChild(speed);
    container.appendChild(bar);

    const chatForm = document.createElement("div");
    chatForm.className = "chat-form";
    this.senderSelect = document.createElement("select");
    chatForm.appendChild(this.senderSelect);
    this.input = document.createElement("input");
    this.input.type = "text";
    this.input.placeholder = "Say something to the team (try: Find my keys)";
    this.input.maxLength = 200;
    this.input.addEventListener("keydown", (ev) => {
      if (ev.key === "Enter") this.sendUtterance();
    });
    chatForm.appendChild(this.input);
    this.button(chatForm, "Send", () => this.sendUtterance());
    container.appendChild(chatForm);
  }

  private button(parent: HTMLElement, label: string, onClick: () => void): HTMLButtonElement {
    const b = document.createElement("button");
    b.textContent = label;
    b.onclick = onClick;
    parent.appendChild(b);
    return b;
  }

  private togglePause(): void {
    this.socket.send({ kind: this.store.paused ? "resume" : "pause" });
  }

  private sendUtterance(): void {
    const text = this.input.value.trim();
    const sender = this.senderSelect.value;
    if (!text || !sender) return; // empty input: send stays disabled
    // never locally pre-echoed: the chat panel fills from the trace echo
    if (this.socket.send({ kind: "utterance", sender, text })) {
      this.input.value = "";
    }
  }

  render(): void {
    const humans = this.store.snapshot?.scenario.humans ?? [];
    if (this.senderSelect.options.length !== humans.length) {
      this.senderSelect.replaceChildren();
      for (const human of humans) {
        const opt = document.createElement("option");
        opt.value = human;
        opt.textContent = human;
        this.senderSelect.appendChild(opt);
      }
    }
    this.pauseButton.textContent = this.store.paused ? "Resume" : "Pause";
    const bits = [
      `connection: ${this.store.connection}`,
      `tick: ${this.store.tick}`,
      this.store.paused ? "paused" : "running",
    ];
    if (this.store.runComplete) bits.push("run complete");
    if (this.store.lastError) bits.push(`error: ${this.store.lastError}`);
    this.statusEl.textContent = bits.join("  |  ");
    this.statusEl.classList.toggle("retrying", this.store.connection === "retrying");
  }
}
