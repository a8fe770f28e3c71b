import { HttpHubApi } from "./api.js";
import { DashboardController } from "./dashboard.js";
import { DomRenderer } from "./dom.js";

const root = document.getElementById("dashboard");
if (root) {
  const renderer = new DomRenderer(root);
  const controller = new DashboardController(new HttpHubApi(), renderer);
  renderer.attach(controller);
  void controller.load();
  // keep card states fresh without any mutating traffic
  setInterval(() => void controller.load(), 15_000);
}
