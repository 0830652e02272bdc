import { ChatApi } from "./api.js";
import { SessionStore } from "./state.js";
import { ChatView } from "./view.js";

const params = new URLSearchParams(window.location.search);
const baseUrl =
  params.get("service") ??
  (window as { MDDIAL_SERVICE_URL?: string }).MDDIAL_SERVICE_URL ??
  "http://127.0.0.1:8700";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

const store = new SessionStore(new ChatApi(baseUrl));
new ChatView(root, store).mount();
